// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "egogen/tensor.hpp"

namespace egogen::camera {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Zero-skew pinhole intrinsics, in pixels.
struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
};

/// World-to-camera extrinsics: x_cam = R * x_world + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

struct Frame {
  Pose pose;
  Intrinsics K;
};

using Trajectory = std::vector<Frame>;

void validate(const Intrinsics& K);
void validate(const Pose& pose);  // orthonormal with det 1, within 1e-6
void validate(const Trajectory& traj);

Mat4 to_matrix(const Pose& pose);
Pose from_matrix(const Mat4& m);

struct Ray {
  Vec3 origin;     // camera centre in world coordinates, -R^T t
  Vec3 direction;  // unit length
};

/// Ray through integer pixel position (u, v); no half-pixel offset.
Ray pixel_ray(const Pose& pose, const Intrinsics& K, double u, double v);

/// Per-pixel Plücker coordinates, stored channel-major as 6 x H x W with
/// channel order (m1, m2, m3, d1, d2, d3) and m = d x o.
class PluckerMap {
 public:
  PluckerMap() = default;
  PluckerMap(std::size_t height, std::size_t width) : values_({6, height, width}) {}

  std::size_t height() const { return values_.empty() ? 0 : values_.dim(1); }
  std::size_t width() const { return values_.empty() ? 0 : values_.dim(2); }

  /// The 6-vector at (u, v) as (m, d).
  Eigen::Matrix<double, 6, 1> at(std::size_t u, std::size_t v) const;

  const Tensor& tensor() const { return values_; }
  Tensor& tensor() { return values_; }

 private:
  Tensor values_;
};

PluckerMap plucker_map(const Pose& pose, const Intrinsics& K, std::size_t height,
                       std::size_t width);

/// Re-express every frame relative to frame 0: E_i' = E_i * E_0^-1. Frame 0
/// becomes the identity and all relative poses are kept; intrinsics are
/// copied unchanged.
Trajectory normalize_trajectory(const Trajectory& traj);

/// Rotation about a unit axis, used by tests and metrics sweeps.
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

}  // namespace egogen::camera
