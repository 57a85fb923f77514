// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "egogen/denoiser.hpp"

namespace egogen::gen {

/// Anything that predicts a velocity for z (C x T x H' x W') at per-frame
/// times.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual Tensor velocity(const Tensor& z, std::span<const double> taus,
                          const Conditioning& c) const = 0;
};

class DenoiserField : public VelocityField {
 public:
  DenoiserField(const DenoiserParams& den, const cond::AdapterParams* adapter, bool causal)
      : den_(&den), adapter_(adapter), causal_(causal) {}
  Tensor velocity(const Tensor& z, std::span<const double> taus,
                  const Conditioning& c) const override;

 private:
  const DenoiserParams* den_;
  const cond::AdapterParams* adapter_;
  bool causal_;
};

/// Wraps a closed-form field v(z, tau); conditioning is ignored and every
/// frame must share one time value.
class FunctionField : public VelocityField {
 public:
  explicit FunctionField(std::function<Tensor(const Tensor&, double)> fn) : fn_(std::move(fn)) {}
  Tensor velocity(const Tensor& z, std::span<const double> taus,
                  const Conditioning& c) const override;

 private:
  std::function<Tensor(const Tensor&, double)> fn_;
};

/// Standard normal tensor from a seed.
Tensor seeded_noise(const Shape& shape, std::uint64_t seed);

/// Integrates dz = -v dtau from tau = 1 to 0 on a uniform grid of `steps`.
Tensor euler_integrate(const VelocityField& field, Tensor z, const Conditioning& c,
                       std::size_t steps);
/// Starts from seeded noise shaped like the conditioning latents.
Tensor euler_sample(const VelocityField& field, const Conditioning& c, std::size_t steps,
                    std::uint64_t seed);
/// Bidirectional model sampling.
Tensor euler_sample(const DenoiserParams& den, const cond::AdapterParams* adapter,
                    const Conditioning& c, std::size_t steps, std::uint64_t seed);

/// Supplies per-block conditioning on request.
class ConditioningStream {
 public:
  virtual ~ConditioningStream() = default;
  /// Conditioning for the next `frames` latent frames, or nothing when the
  /// stream has run out.
  virtual std::optional<Conditioning> next(std::size_t frames) = 0;
};

/// Streams consecutive slices of a fixed conditioning sequence.
class SequenceStream : public ConditioningStream {
 public:
  explicit SequenceStream(Conditioning all) : all_(std::move(all)) {}
  std::optional<Conditioning> next(std::size_t frames) override;
  std::size_t consumed() const { return pos_; }

 private:
  Conditioning all_;
  std::size_t pos_ = 0;
};

struct RolloutConfig {
  std::size_t block_frames = 3;   // B
  std::size_t denoise_steps = 4;  // N_s
  std::size_t total_blocks = 4;
  std::uint64_t seed = 0;
};

/// Noise for block `block` of a rollout.
Tensor block_noise(const Shape& shape, std::uint64_t seed, std::size_t block);

/// Block-wise causal generation. Each block runs N_s Euler steps attending to
/// the cached frames, then one clean pass at tau = 0 appends its keys and
/// values to `cache`. Returns C x (B * total_blocks) x H' x W'.
Tensor ar_rollout(const DenoiserParams& student, const cond::AdapterParams* adapter,
                  ConditioningStream& stream, const RolloutConfig& cfg, KVCache& cache);

}  // namespace egogen::gen
