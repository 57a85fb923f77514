// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "egogen/camera.hpp"
#include "egogen/training.hpp"

// Synthetic data for the training demos and tests.
namespace egogen::gen {

/// Smooth random camera path of n frames for an h x w image: small
/// accumulated rotations and translations, focal length w, centred principal
/// point.
camera::Trajectory random_trajectory(std::size_t n, std::size_t height, std::size_t width,
                                     std::mt19937_64& rng);

struct CameraTaskConfig {
  DenoiserConfig model;
  cond::AdapterConfig adapter;  // dim must equal model.dim
  std::size_t latent_frames = 3;
  std::size_t latent_h = 4;
  std::size_t latent_w = 4;
  double hidden_scale = 1.0;     // stddev of the hidden adapter's output layer
  bool linear_backbone = false;  // zero wo/w2/b2 so blocks pass tokens through
};

/// A task whose target velocity depends only on the conditioning. The
/// backbone ignores the noisy latent and tau (zeroed input rows and time
/// weights), and every example's clean latent is eps - v*, where v* is the
/// backbone's output with a hidden camera adapter. Training the adapter
/// alone can therefore reach zero loss.
struct CameraTask {
  CameraTaskConfig cfg;
  DenoiserParams backbone;
  cond::AdapterParams hidden;
  DataFn data;
};

CameraTask make_camera_task(const CameraTaskConfig& cfg, std::uint64_t seed);

}  // namespace egogen::gen
