// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "egogen/camera.hpp"
#include "egogen/render.hpp"
#include "egogen/stabilizer.hpp"

// Text formats shared by the library and the CLI. docs/formats.md has the
// schemas. Parse errors carry ErrorCode::kParse and name the offending line.
namespace egogen::io {

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_text(const std::filesystem::path& path, const std::string& text);

// Trajectory: JSON array, one {R, t, fx, fy, cx, cy} object per frame.
camera::Trajectory parse_trajectory(const std::string& text);
std::string format_trajectory(const camera::Trajectory& traj);
camera::Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const camera::Trajectory& traj);

// Detections: JSON Lines. A header line {frames, width, height}, then one
// {frame, detections: [{hand, box, confidence}]} record per line. An empty
// document means zero frames.
struct DetectionFile {
  std::size_t frames = 0;
  stabilize::ImageDims dims;
  std::vector<stabilize::Detection> detections;
};
DetectionFile parse_detections(const std::string& text);
std::string format_detections(const DetectionFile& file);
DetectionFile read_detections(const std::filesystem::path& path);

// Track: JSON Lines. Header {frames, width, height}, then one
// {frame, left, right} record per frame; missing hands are null.
stabilize::DetectionTrack parse_track(const std::string& text);
std::string format_track(const stabilize::DetectionTrack& track);
stabilize::DetectionTrack read_track(const std::filesystem::path& path);
void write_track(const std::filesystem::path& path, const stabilize::DetectionTrack& track);

// Hand parameters: JSON array, one {left, right} object per frame. Each hand
// is null or {beta[10], global_orient[3], pose[45], t[3]}.
std::vector<render::FrameHands> parse_hand_params(const std::string& text);
std::string format_hand_params(const std::vector<render::FrameHands>& frames);
std::vector<render::FrameHands> read_hand_params(const std::filesystem::path& path);
void write_hand_params(const std::filesystem::path& path,
                       const std::vector<render::FrameHands>& frames);

}  // namespace egogen::io
