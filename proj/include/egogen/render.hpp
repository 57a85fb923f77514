// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "egogen/camera.hpp"
#include "egogen/hand_model.hpp"
#include "egogen/image.hpp"

namespace egogen::render {

using hand::Handedness;

/// Vertices projected with a pinhole camera. Vertices at depth <= 1e-6 are
/// marked invalid; any triangle touching one is never rasterized.
struct ProjectedMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> points;  // pixel coordinates
  std::vector<double> depths;
  std::vector<std::uint8_t> valid;
  std::shared_ptr<const std::vector<hand::Face>> faces;
  Handedness handedness = Handedness::kLeft;

  std::size_t valid_count() const;
};

struct RenderStyle {
  Rgb silhouette_left{180, 0, 0};
  Rgb wire_left{255, 80, 80};
  Rgb silhouette_right{0, 0, 180};
  Rgb wire_right{80, 80, 255};
  int line_width = 1;
  // A wire pixel survives the depth test when its depth is within this
  // fraction of the nearest surface depth in its 3x3 neighbourhood.
  double wire_depth_tolerance = 0.01;
};

void validate(const RenderStyle& style);

ProjectedMesh project_vertices(const hand::HandMesh& mesh, const camera::Intrinsics& K,
                               Handedness handedness);

/// Per-pixel owner codes used by the layer buffers.
inline constexpr std::int8_t kNoHand = -1;
inline constexpr std::int8_t kLeftHand = 0;
inline constexpr std::int8_t kRightHand = 1;

/// Everything the rasterizer produced, for inspection; `image` is the control
/// frame itself.
struct RenderLayers {
  RgbImage image;
  std::vector<std::int8_t> silhouette_owner;  // H*W
  std::vector<std::int8_t> wire_owner;        // H*W
  std::vector<double> depth;                  // H*W, +inf where empty
};

RenderLayers render_layers(const std::optional<ProjectedMesh>& left,
                           const std::optional<ProjectedMesh>& right, std::size_t height,
                           std::size_t width, const RenderStyle& style);

RgbImage render_control(const std::optional<ProjectedMesh>& left,
                        const std::optional<ProjectedMesh>& right, std::size_t height,
                        std::size_t width, const RenderStyle& style = {});

struct HandParams {
  hand::HandShape shape;
  hand::HandPose pose;
  hand::HandTranslation translation;
};

/// Hands present in one frame, in that frame's camera coordinates.
struct FrameHands {
  std::optional<HandParams> left;
  std::optional<HandParams> right;
};

std::vector<RgbImage> render_sequence(const hand::HandModelData& model,
                                      const std::vector<FrameHands>& params,
                                      const camera::Trajectory& traj, std::size_t height,
                                      std::size_t width, const RenderStyle& style = {});

}  // namespace egogen::render
