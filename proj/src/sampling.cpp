// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/sampling.hpp"

#include <random>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::gen {

Tensor DenoiserField::velocity(const Tensor& z, std::span<const double> taus,
                               const Conditioning& c) const {
  return predict_velocity(*den_, adapter_, z, c, taus, ForwardOptions{causal_});
}

Tensor FunctionField::velocity(const Tensor& z, std::span<const double> taus,
                               const Conditioning&) const {
  require(!taus.empty(), ErrorCode::kInvalidArgument, "no time values");
  for (double t : taus) {
    require(t == taus[0], ErrorCode::kInvalidArgument, "closed-form field needs one shared time");
  }
  Tensor v = fn_(z, taus[0]);
  require(v.shape() == z.shape(), ErrorCode::kShapeMismatch,
          "closed-form field returned " + shape_str(v.shape()) + " for " + shape_str(z.shape()));
  return v;
}

Tensor seeded_noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return randn(shape, rng);
}

Tensor euler_integrate(const VelocityField& field, Tensor z, const Conditioning& c,
                       std::size_t steps) {
  require(steps >= 1, ErrorCode::kInvalidArgument, "Euler sampling needs at least one step");
  require(z.rank() == 4, ErrorCode::kShapeMismatch, "latent must be C x T x H' x W'");
  const double n = static_cast<double>(steps);
  std::vector<double> taus(z.dim(1));
  for (std::size_t s = 0; s < steps; ++s) {
    const double tau = 1.0 - static_cast<double>(s) / n;
    const double next = 1.0 - static_cast<double>(s + 1) / n;
    std::fill(taus.begin(), taus.end(), tau);
    const Tensor v = field.velocity(z, taus, c);
    const double dt = tau - next;
    for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= dt * v[i];
  }
  return z;
}

Tensor euler_sample(const VelocityField& field, const Conditioning& c, std::size_t steps,
                    std::uint64_t seed) {
  return euler_integrate(field, seeded_noise(c.z_hand.shape(), seed), c, steps);
}

Tensor euler_sample(const DenoiserParams& den, const cond::AdapterParams* adapter,
                    const Conditioning& c, std::size_t steps, std::uint64_t seed) {
  return euler_sample(DenoiserField(den, adapter, false), c, steps, seed);
}

std::optional<Conditioning> SequenceStream::next(std::size_t frames) {
  if (pos_ + frames > all_.frames()) return std::nullopt;
  Conditioning out = all_.slice(pos_, frames);
  pos_ += frames;
  return out;
}

Tensor block_noise(const Shape& shape, std::uint64_t seed, std::size_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), 0x626c6bu};
  std::mt19937_64 rng(seq);
  return randn(shape, rng);
}

Tensor ar_rollout(const DenoiserParams& student, const cond::AdapterParams* adapter,
                  ConditioningStream& stream, const RolloutConfig& cfg, KVCache& cache) {
  require(cfg.block_frames >= 1 && cfg.denoise_steps >= 1 && cfg.total_blocks >= 1,
          ErrorCode::kInvalidArgument, "rollout needs positive block size, steps and block count");
  Tensor video;
  const double n = static_cast<double>(cfg.denoise_steps);
  std::vector<double> taus(cfg.block_frames);
  for (std::size_t b = 0; b < cfg.total_blocks; ++b) {
    std::optional<Conditioning> c = stream.next(cfg.block_frames);
    if (!c) {
      fail(ErrorCode::kStreamExhausted,
           fmt::format("conditioning stream exhausted at block {} of {}", b, cfg.total_blocks));
    }
    Tensor z = block_noise(c->z_hand.shape(), cfg.seed, b);
    for (std::size_t s = 0; s < cfg.denoise_steps; ++s) {
      const double tau = 1.0 - static_cast<double>(s) / n;
      const double next = 1.0 - static_cast<double>(s + 1) / n;
      std::fill(taus.begin(), taus.end(), tau);
      const Tensor v = predict_velocity(student, adapter, z, *c, taus, ForwardOptions{true, &cache});
      const double dt = tau - next;
      for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= dt * v[i];
    }
    std::fill(taus.begin(), taus.end(), 0.0);
    predict_velocity(student, adapter, z, *c, taus, ForwardOptions{true, &cache, &cache});
    video = concat_frames(video, z);
  }
  return video;
}

}  // namespace egogen::gen
