// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace egogen::hand {

inline constexpr int kNumVertices = 778;
inline constexpr int kNumJoints = 16;
inline constexpr int kNumShape = 10;
inline constexpr int kNumPoseFeatures = (kNumJoints - 1) * 9;  // 135

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Face = std::array<std::int32_t, 3>;

enum class Handedness { kLeft, kRight };

struct HandShape {
  std::array<double, kNumShape> beta{};
};

/// Axis-angle rotations in radians: the wrist (global orientation) followed by
/// the 15 finger joints in kinematic-tree order.
struct HandPose {
  Vec3 global_orient = Vec3::Zero();
  std::array<Vec3, kNumJoints - 1> joint_rotations{};

  HandPose() { joint_rotations.fill(Vec3::Zero()); }
};

struct HandTranslation {
  Vec3 t = Vec3::Zero();
};

/// Parametric hand model. Blend-shape tensors are flattened so that row
/// `3 * v + c` holds coordinate c of vertex v.
struct HandModelData {
  Vertices templ;                                   // 778 x 3, metres
  std::shared_ptr<const std::vector<Face>> faces;
  Eigen::MatrixXd shape_dirs;                       // 2334 x 10
  Eigen::MatrixXd pose_dirs;                        // 2334 x 135
  Eigen::MatrixXd joint_regressor;                  // 16 x 778
  Eigen::MatrixXd skin_weights;                     // 778 x 16
  std::array<std::int32_t, kNumJoints> parents{};   // parents[0] == -1
};

struct HandMesh {
  Vertices vertices;               // camera frame, metres
  std::shared_ptr<const std::vector<Face>> faces;  // shared with the model
};

/// Throws Error(kInvariant / kNormalization) naming the first violation.
void validate(const HandModelData& model);

HandModelData load_hand_model(const std::filesystem::path& path);
void save_hand_model(const std::filesystem::path& path, const HandModelData& model);

/// Procedural stand-in with the same structure as the real model: a capsule
/// palm and five tube fingers, 16 joints, seeded random blend shapes. All
/// stored values are exactly representable as f32 so a save/load round trip
/// is lossless.
HandModelData make_synthetic_model(std::uint64_t seed);

/// Axis-angle exponential map.
Mat3 rodrigues(const Vec3& axis_angle);

/// Rest-pose joint locations of the shaped template.
Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor> shaped_joints(
    const HandModelData& model, const HandShape& shape);

HandMesh forward(const HandModelData& model, const HandShape& shape, const HandPose& pose,
                 const HandTranslation& translation);

}  // namespace egogen::hand
