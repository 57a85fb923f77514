// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "egogen/autograd.hpp"
#include "egogen/conditioning.hpp"
#include "egogen/params.hpp"
#include "egogen/tensor.hpp"

// Toy rectified-flow denoiser:
//   1x2x2 patch embed of [z_tau; z_hand; z_ref]  + frame time embedding
//   + camera tokens  ->  L x (temporal self-attention, SiLU feed-forward)
//   -> linear head -> unpatchify to a C x T x H' x W' velocity.
// Attention runs along time only, independently per token column.
namespace egogen::gen {

struct DenoiserConfig {
  std::size_t channels = cond::kLatentChannels;  // C
  std::size_t dim = 32;                          // D
  std::size_t blocks = 2;                        // L
  std::size_t ffn_mult = 2;
  std::size_t time_features = 8;
  std::size_t lora_rank = 4;
  double lora_alpha = 4.0;
};

/// Base weights plus optional low-rank pairs (A: in x r, B: r x out) on the
/// q/k/v projections and both feed-forward weights.
struct DenoiserParams {
  DenoiserConfig cfg;
  ParamSet base;
  ParamSet lora;

  bool has_lora() const { return !lora.empty(); }
};

DenoiserParams init_denoiser(const DenoiserConfig& cfg, std::mt19937_64& rng);
/// Adds A ~ N(0, a_std^2), B = 0 for every adapted weight.
void attach_lora(DenoiserParams& params, std::mt19937_64& rng, double a_std = 0.01);
void validate(const DenoiserParams& params);
/// Weights that receive low-rank updates, e.g. "blk0.wq".
std::vector<std::string> lora_targets(const DenoiserConfig& cfg);

/// Frame-wise concatenation of latents with equal C, H', W'.
Tensor concat_frames(const Tensor& a, const Tensor& b);
/// Frames [begin, begin + count) of a latent.
Tensor slice_frames(const Tensor& z, std::size_t begin, std::size_t count);

/// Per-sequence conditioning. `packs` may be empty, in which case no camera
/// tokens are added.
struct Conditioning {
  Tensor z_hand;  // C x T x H' x W'
  Tensor z_ref;   // C x T x H' x W'
  std::vector<Tensor> packs;  // T x (24 x H x W)

  std::size_t frames() const { return z_hand.rank() == 4 ? z_hand.dim(1) : 0; }
  /// Frames [begin, begin + count).
  Conditioning slice(std::size_t begin, std::size_t count) const;
  /// Frame-wise concatenation of a and b.
  static Conditioning join(const Conditioning& a, const Conditioning& b);
};

/// Keys and values of previously generated latent frames, per layer.
struct KVCache {
  std::vector<Tensor> keys;    // per layer: (frames * columns) x D
  std::vector<Tensor> values;
  std::vector<std::size_t> block_starts;
  std::size_t columns = 0;
  std::size_t frames = 0;

  void clear() { *this = KVCache{}; }
};

struct ForwardOptions {
  bool causal = true;
  /// Earlier frames to attend to. Query frames sit after the cached ones.
  const KVCache* cache = nullptr;
  /// When set, the keys and values of this call are appended here.
  KVCache* append_to = nullptr;
};

/// Which parameter groups get gradients on a tape.
struct Trainable {
  bool base = false;
  bool lora = false;
  bool adapter = false;
};

/// Model parameters bound to one tape.
class BoundModel {
 public:
  BoundModel(ad::Tape& tape, const DenoiserParams& den, const cond::AdapterParams* adapter,
             Trainable trainable);

  /// Velocity for z (C x T x H' x W', on this tape) at per-frame times `taus`.
  ad::Var velocity(const ad::Var& z, const Conditioning& c, std::span<const double> taus,
                   const ForwardOptions& opt) const;

  ParamSet base_grads() const { return base_.grads(den_->base); }
  ParamSet lora_grads() const { return lora_.grads(den_->lora); }
  ParamSet adapter_grads() const;

 private:
  ad::Tape* tape_;
  const DenoiserParams* den_;
  const cond::AdapterParams* adapter_;
  VarSet base_, lora_, adapter_vars_;
};

/// Velocity without gradients.
Tensor predict_velocity(const DenoiserParams& den, const cond::AdapterParams* adapter,
                        const Tensor& z, const Conditioning& c, std::span<const double> taus,
                        const ForwardOptions& opt = {});

/// One flow-matching example: z_tau = (1 - tau) z0 + tau eps, target eps - z0.
struct FlowSample {
  Tensor z0;
  Tensor eps;
  double tau = 0.0;
  Conditioning cond;
};

struct LossGrad {
  double loss = 0.0;
  ParamSet base;
  ParamSet lora;
  ParamSet adapter;
};

/// Mean over samples of the mean squared velocity error, with gradients for
/// the groups in `trainable` (others come back as zeros).
LossGrad loss_and_grad(const DenoiserParams& den, const cond::AdapterParams* adapter,
                       const std::vector<FlowSample>& batch, Trainable trainable,
                       bool causal = false);

Tensor interpolate_latent(const Tensor& z0, const Tensor& eps, double tau);
Tensor velocity_target(const Tensor& z0, const Tensor& eps);

/// Sinusoidal features of tau, length cfg.time_features.
std::vector<double> time_features(double tau, std::size_t count);

}  // namespace egogen::gen
