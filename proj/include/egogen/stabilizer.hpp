// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "egogen/hand_model.hpp"

namespace egogen::stabilize {

using hand::Handedness;

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double diagonal() const;
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  std::size_t frame = 0;
  Handedness handedness = Handedness::kLeft;
  Box box;
  double confidence = 0.0;
  // Set on boxes that already went through enlargement, so a second pass over
  // stabilized output does not grow them again.
  bool enlarged = false;
  bool interpolated = false;
};

/// One retained box in a track.
struct TrackBox {
  Box box;
  double confidence = 0.0;
  bool interpolated = false;

  friend bool operator==(const TrackBox&, const TrackBox&) = default;
};

struct ImageDims {
  double height = 0, width = 0;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// Per-hand optional box for each of `frames` frames.
struct DetectionTrack {
  std::size_t frames = 0;
  ImageDims dims;
  std::array<std::vector<std::optional<TrackBox>>, 2> hands;  // [left, right]

  DetectionTrack() = default;
  DetectionTrack(std::size_t n, ImageDims d);

  std::optional<TrackBox>& at(Handedness h, std::size_t frame);
  const std::optional<TrackBox>& at(Handedness h, std::size_t frame) const;

  friend bool operator==(const DetectionTrack&, const DetectionTrack&) = default;
};

struct StabilizerConfig {
  double iou_threshold = 0.5;
  double edge_margin_frac = 0.10;
  double enlarge_factor = 1.2;
  std::size_t max_gap_frames = 5;
  double proximity_frac = 0.5;
};

void validate(const Box& box);
void validate(const StabilizerConfig& cfg);

/// Intersection over union; 0 for disjoint boxes. Degenerate boxes throw.
double iou(const Box& a, const Box& b);

/// Highest-confidence box per (frame, hand). Ties go to the smaller box, then
/// to the earlier detection. Detections at frames >= n are ignored.
DetectionTrack select_best(const std::vector<Detection>& detections, std::size_t n,
                           ImageDims dims = {});

/// Same centre, sides scaled by `factor`, clamped to [0, W] x [0, H].
Box enlarge_box(const Box& box, double factor, ImageDims dims);

/// Removes the weaker of an overlapping left/right pair (IoU > threshold).
/// Genuine detections beat interpolated ones, then higher confidence wins,
/// then the left hand.
DetectionTrack overlap_filter(const DetectionTrack& track, const StabilizerConfig& cfg);

/// Linear fill of short interior gaps whose endpoints are away from the
/// image border and close to each other. Filled boxes have confidence 0.
DetectionTrack interpolate_gaps(const DetectionTrack& track, const StabilizerConfig& cfg);

struct StabilizeStats {
  std::size_t kept = 0;          // boxes in the final track that came from detections
  std::size_t removed = 0;       // detections dropped by selection or overlap filtering
  std::size_t interpolated = 0;  // boxes in the final track created by interpolation
};

/// select_best -> enlarge -> overlap_filter -> interpolate_gaps -> overlap_filter.
DetectionTrack stabilize(const std::vector<Detection>& detections, std::size_t n, ImageDims dims,
                         const StabilizerConfig& cfg, StabilizeStats* stats = nullptr);

/// Flattens a track back into detections (marked as already enlarged).
std::vector<Detection> to_detections(const DetectionTrack& track);

}  // namespace egogen::stabilize
