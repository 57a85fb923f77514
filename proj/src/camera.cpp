// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/camera.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <fmt/format.h>

#include "egogen/error.hpp"
#include "egogen/simd/kernels.hpp"

namespace egogen::camera {

void validate(const Intrinsics& K) {
  require(std::isfinite(K.fx) && std::isfinite(K.fy) && std::isfinite(K.cx) && std::isfinite(K.cy),
          ErrorCode::kNonFinite, "intrinsics contain non-finite values");
  require(K.fx > 0.0 && K.fy > 0.0, ErrorCode::kInvalidArgument,
          fmt::format("focal lengths must be positive (fx={}, fy={})", K.fx, K.fy));
}

void validate(const Pose& pose) {
  require(pose.R.allFinite() && pose.t.allFinite(), ErrorCode::kNonFinite,
          "pose contains non-finite values");
  const double ortho = (pose.R.transpose() * pose.R - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-6, ErrorCode::kInvalidArgument,
          fmt::format("rotation is not orthonormal (max |R^T R - I| = {:.3g})", ortho));
  const double det = pose.R.determinant();
  require(std::abs(det - 1.0) <= 1e-6, ErrorCode::kInvalidArgument,
          fmt::format("rotation determinant is {:.9g}, expected 1", det));
}

void validate(const Trajectory& traj) {
  require(!traj.empty(), ErrorCode::kInvalidArgument, "trajectory is empty");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    try {
      validate(traj[i].pose);
      validate(traj[i].K);
    } catch (const Error& e) {
      fail(e.code(), fmt::format("frame {}: {}", i, e.what()));
    }
  }
}

Mat4 to_matrix(const Pose& pose) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = pose.R;
  m.topRightCorner<3, 1>() = pose.t;
  return m;
}

Pose from_matrix(const Mat4& m) {
  return Pose{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

namespace {

// R^T K^-1, written out for zero skew.
Mat3 ray_basis(const Pose& pose, const Intrinsics& K) {
  Mat3 k_inv;
  k_inv << 1.0 / K.fx, 0.0, -K.cx / K.fx, 0.0, 1.0 / K.fy, -K.cy / K.fy, 0.0, 0.0, 1.0;
  return pose.R.transpose() * k_inv;
}

}  // namespace

Ray pixel_ray(const Pose& pose, const Intrinsics& K, double u, double v) {
  require(std::isfinite(u) && std::isfinite(v), ErrorCode::kNonFinite, "non-finite pixel coordinate");
  require(pose.R.allFinite() && pose.t.allFinite(), ErrorCode::kNonFinite, "non-finite pose");
  validate(K);
  const Vec3 dir = ray_basis(pose, K) * Vec3(u, v, 1.0);
  return Ray{-pose.R.transpose() * pose.t, dir.normalized()};
}

Eigen::Matrix<double, 6, 1> PluckerMap::at(std::size_t u, std::size_t v) const {
  Eigen::Matrix<double, 6, 1> out;
  const std::size_t plane = height() * width();
  for (std::size_t c = 0; c < 6; ++c) out(c) = values_[c * plane + v * width() + u];
  return out;
}

PluckerMap plucker_map(const Pose& pose, const Intrinsics& K, std::size_t height,
                       std::size_t width) {
  require(height >= 1 && width >= 1, ErrorCode::kInvalidArgument,
          fmt::format("Plücker grid must be non-empty (got {}x{})", height, width));
  require(pose.R.allFinite() && pose.t.allFinite(), ErrorCode::kNonFinite, "non-finite pose");
  validate(K);

  // Row-major copy for the kernel.
  const Mat3 basis = ray_basis(pose, K);
  double m[9];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[3 * r + c] = basis(r, c);
  const Vec3 origin = -pose.R.transpose() * pose.t;

  PluckerMap map(height, width);
  double* base = map.tensor().data();
  const std::size_t plane = height * width;
  const auto& kernels = simd::active();
  for (std::size_t v = 0; v < height; ++v) {
    simd::PluckerRowArgs args{};
    args.ray_basis = m;
    args.origin = origin.data();
    args.v = static_cast<double>(v);
    args.width = width;
    for (std::size_t c = 0; c < 6; ++c) args.out[c] = base + c * plane + v * width;
    kernels.plucker_row(args);
  }
  return map;
}

Trajectory normalize_trajectory(const Trajectory& traj) {
  require(!traj.empty(), ErrorCode::kInvalidArgument, "cannot normalize an empty trajectory");
  // Rigid inverse of the first extrinsic, formed in closed form.
  const Pose& p0 = traj.front().pose;
  Mat4 inv0 = Mat4::Identity();
  inv0.topLeftCorner<3, 3>() = p0.R.transpose();
  inv0.topRightCorner<3, 1>() = -p0.R.transpose() * p0.t;

  Trajectory out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    Frame f;
    f.K = traj[i].K;
    f.pose = i == 0 ? Pose{} : from_matrix(to_matrix(traj[i].pose) * inv0);
    out.push_back(f);
  }
  return out;
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace egogen::camera
