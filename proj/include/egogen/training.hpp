// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "egogen/denoiser.hpp"
#include "egogen/optim.hpp"

namespace egogen::gen {

struct TrainConfig {
  double lr = 1e-4;
  double clip_norm = 0.05;
  std::size_t stage1_steps = 100;
  std::size_t stage2_steps = 100;
  std::size_t batch_size = 2;
  std::uint64_t seed = 0;
  bool causal = false;  // the teacher is bidirectional
  AdamWConfig adamw;    // lr here is overridden by `lr`
};

void validate(const TrainConfig& cfg);

/// A clean latent and its conditioning. Tasks whose clean latent is tied to
/// the noise draw supply `eps` as well.
struct Example {
  Tensor z0;
  Conditioning cond;
  std::optional<Tensor> eps;
};
using DataFn = std::function<Example(std::mt19937_64&)>;

/// One line of a training log.
struct StepLog {
  std::string stage;
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double p = 0.0;  // self-forcing probability, 0 outside distillation
};
using LogFn = std::function<void(const StepLog&)>;
std::string to_json_line(const StepLog& log);

/// Draws a flow-matching batch: eps ~ N(0, 1) unless the example carries one,
/// tau ~ U[0, 1].
std::vector<FlowSample> draw_batch(const DataFn& data, std::size_t n, std::mt19937_64& rng);

struct TrainResult {
  DenoiserParams den;
  cond::AdapterParams adapter;
};

/// Stage 1 trains the camera adapter with the backbone frozen. Stage 2 attaches
/// low-rank adapters (if missing) and trains them together with the camera
/// adapter; base weights never change.
TrainResult train_two_stage(const DenoiserParams& init, const cond::AdapterParams& adapter,
                            const DataFn& data, const TrainConfig& cfg, const LogFn& log = {});

/// Directory with one EGT1 (f64) file per tensor plus manifest.json.
void save_checkpoint(const std::filesystem::path& dir, const DenoiserParams& den,
                     const cond::AdapterParams* adapter, const std::string& stage);
struct Checkpoint {
  DenoiserParams den;
  std::optional<cond::AdapterParams> adapter;
  std::string stage;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace egogen::gen
