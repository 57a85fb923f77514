// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/toy.hpp"

#include <cmath>
#include <memory>

#include <Eigen/SVD>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::gen {

camera::Trajectory random_trajectory(std::size_t n, std::size_t height, std::size_t width,
                                     std::mt19937_64& rng) {
  require(n > 0 && height > 0 && width > 0, ErrorCode::kInvalidArgument,
          "random trajectory needs frames and a non-empty image");
  std::normal_distribution<double> step(0.0, 1.0);
  const camera::Intrinsics K{static_cast<double>(width), static_cast<double>(width),
                             0.5 * static_cast<double>(width - 1),
                             0.5 * static_cast<double>(height - 1)};
  camera::Trajectory traj;
  camera::Pose pose;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const camera::Vec3 axis(step(rng), step(rng), step(rng));
      const double angle = 0.03 * std::abs(step(rng));
      pose.R = camera::axis_angle_rotation(axis.normalized(), angle) * pose.R;
      pose.t += 0.05 * camera::Vec3(step(rng), step(rng), step(rng));
      // Re-orthonormalize so long paths stay valid rotations.
      Eigen::JacobiSVD<camera::Mat3> svd(pose.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
      pose.R = svd.matrixU() * svd.matrixV().transpose();
    }
    traj.push_back({pose, K});
  }
  return traj;
}

CameraTask make_camera_task(const CameraTaskConfig& cfg, std::uint64_t seed) {
  require(cfg.adapter.dim == cfg.model.dim, ErrorCode::kInvalidArgument,
          fmt::format("adapter width {} does not match model width {}", cfg.adapter.dim,
                      cfg.model.dim));
  require(cfg.latent_frames > 0 && cfg.latent_h % 2 == 0 && cfg.latent_w % 2 == 0 &&
              cfg.latent_h > 0 && cfg.latent_w > 0,
          ErrorCode::kInvalidArgument, "camera task: latent grid must be non-empty and even");
  std::mt19937_64 rng(seed);
  CameraTask task{cfg, init_denoiser(cfg.model, rng), cond::init_adapter(cfg.adapter, rng), {}};

  const std::size_t c = cfg.model.channels, pp = cond::kPatch * cond::kPatch;
  Tensor& embed = task.backbone.base.get("embed.w");
  for (std::size_t r = 0; r < c * pp; ++r) {
    for (std::size_t k = 0; k < embed.dim(1); ++k) embed[r * embed.dim(1) + k] = 0.0;
  }
  task.backbone.base.get("time.w") *= 0.0;
  if (cfg.linear_backbone) {
    for (std::size_t l = 0; l < cfg.model.blocks; ++l) {
      for (const char* w : {"wo", "w2", "b2"}) {
        task.backbone.base.get(fmt::format("blk{}.{}", l, w)) *= 0.0;
      }
    }
  }
  auto& out_w = task.hidden.params.get("out.w");
  out_w = randn(out_w.shape(), rng,
                cfg.hidden_scale / std::sqrt(static_cast<double>(out_w.dim(0))));

  auto backbone = std::make_shared<const DenoiserParams>(task.backbone);
  auto hidden = std::make_shared<const cond::AdapterParams>(task.hidden);
  const std::size_t t = cfg.latent_frames, h = cfg.latent_h, w = cfg.latent_w;
  const std::size_t ph = h * cond::kSpatialStride, pw = w * cond::kSpatialStride;
  task.data = [backbone, hidden, c, t, h, w, ph, pw](std::mt19937_64& r) {
    const std::size_t n = t * cond::kTemporalStride;
    std::vector<camera::PluckerMap> maps;
    for (const auto& f : camera::normalize_trajectory(random_trajectory(n, ph, pw, r))) {
      maps.push_back(camera::plucker_map(f.pose, f.K, ph, pw));
    }
    Conditioning cond{randn({c, t, h, w}, r), randn({c, t, h, w}, r),
                      cond::pack_plucker(maps, n)};
    const Tensor zero({c, t, h, w});
    const std::vector<double> taus(t, 0.5);
    Tensor v = predict_velocity(*backbone, hidden.get(), zero, cond, taus, ForwardOptions{false});
    Tensor eps = randn({c, t, h, w}, r);
    Tensor z0 = eps;
    z0 -= v;
    return Example{std::move(z0), std::move(cond), std::move(eps)};
  };
  return task;
}

}  // namespace egogen::gen
