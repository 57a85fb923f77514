// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "egogen/params.hpp"

namespace egogen::gen {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.03;
  double eps = 1e-10;
};

void validate(const AdamWConfig& cfg);

/// Adaptive moments with decoupled weight decay. State is keyed by position,
/// so every step must pass the same parameter set.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg);
  void step(ParamSet& params, const ParamSet& grads);
  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::size_t t_ = 0;
  ParamSet m_, v_;
};

/// Global L2 norm over all sets; if it exceeds `max_norm`, every gradient is
/// scaled by max_norm / norm. Returns the norm before clipping.
double clip_grad_norm(const std::vector<ParamSet*>& grads, double max_norm);

}  // namespace egogen::gen
