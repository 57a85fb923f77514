// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Random fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "egogen/camera.hpp"
#include "egogen/hand_model.hpp"
#include "egogen/stabilizer.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1),
                       uniform(rng, -1, 1));
  q.normalize();
  return q.toRotationMatrix();
}

inline egogen::camera::Frame random_camera(std::mt19937_64& rng) {
  egogen::camera::Frame f;
  f.pose.R = random_rotation(rng);
  f.pose.t = random_vec(rng, 3.0);
  f.K.fx = uniform(rng, 20.0, 200.0);
  f.K.fy = uniform(rng, 20.0, 200.0);
  f.K.cx = uniform(rng, 0.0, 64.0);
  f.K.cy = uniform(rng, 0.0, 64.0);
  return f;
}

inline egogen::hand::HandShape random_shape(std::mt19937_64& rng) {
  egogen::hand::HandShape s;
  for (auto& b : s.beta) b = uniform(rng, -2.0, 2.0);
  return s;
}

inline egogen::hand::HandPose random_pose(std::mt19937_64& rng, double scale = 0.8) {
  egogen::hand::HandPose p;
  p.global_orient = random_vec(rng, 2.0);
  for (auto& r : p.joint_rotations) r = random_vec(rng, scale);
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("egogen_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random detection stream: each hand drifts across the image with dropouts,
/// occasional duplicates and spurious boxes, sometimes near a border.
struct DetectionStream {
  std::size_t frames = 0;
  egogen::stabilize::ImageDims dims;
  std::vector<egogen::stabilize::Detection> detections;
};

inline DetectionStream random_detections(std::mt19937_64& rng) {
  using egogen::stabilize::Box;
  using egogen::stabilize::Detection;
  DetectionStream s;
  s.frames = 5 + rng() % 36;
  s.dims = {uniform(rng, 60, 200), uniform(rng, 60, 200)};
  const double drop = uniform(rng, 0.0, 0.6);
  for (int h = 0; h < 2; ++h) {
    double cx = uniform(rng, 0, s.dims.width), cy = uniform(rng, 0, s.dims.height);
    const double bw = uniform(rng, 8, 40), bh = uniform(rng, 8, 40);
    const double vx = uniform(rng, -3, 3), vy = uniform(rng, -3, 3);
    for (std::size_t f = 0; f < s.frames; ++f) {
      cx += vx;
      cy += vy;
      const int copies = uniform(rng, 0, 1) < drop ? 0 : 1 + static_cast<int>(rng() % 2);
      for (int c = 0; c < copies; ++c) {
        Detection d;
        d.frame = f;
        d.handedness = h == 0 ? egogen::hand::Handedness::kLeft : egogen::hand::Handedness::kRight;
        const double jx = uniform(rng, -2, 2), jy = uniform(rng, -2, 2);
        d.box = Box{cx + jx - bw / 2, cy + jy - bh / 2, cx + jx + bw / 2, cy + jy + bh / 2};
        d.confidence = std::round(uniform(rng, 0.05, 1.0) * 20.0) / 20.0;
        s.detections.push_back(d);
      }
      if (uniform(rng, 0, 1) < 0.1) {
        // A box placed on top of the other hand.
        Detection d;
        d.frame = f;
        d.handedness = h == 0 ? egogen::hand::Handedness::kRight : egogen::hand::Handedness::kLeft;
        d.box = Box{cx - bw / 2, cy - bh / 2, cx + bw / 2 + 1, cy + bh / 2};
        d.confidence = uniform(rng, 0.0, 1.0);
        s.detections.push_back(d);
      }
    }
  }
  return s;
}

}  // namespace testing
