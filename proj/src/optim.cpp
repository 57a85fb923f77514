// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::gen {

void validate(const AdamWConfig& c) {
  require(c.lr > 0.0 && std::isfinite(c.lr), ErrorCode::kInvalidArgument,
          fmt::format("learning rate must be positive (got {})", c.lr));
  require(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0,
          ErrorCode::kInvalidArgument, fmt::format("betas ({}, {}) outside [0, 1)", c.beta1, c.beta2));
  require(c.weight_decay >= 0.0 && c.eps > 0.0, ErrorCode::kInvalidArgument,
          "weight decay must be non-negative and eps positive");
}

AdamW::AdamW(AdamWConfig cfg) : cfg_(cfg) { validate(cfg_); }

void AdamW::step(ParamSet& params, const ParamSet& grads) {
  if (t_ == 0) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  require(params.size() == m_.size() && grads.size() == params.size(), ErrorCode::kShapeMismatch,
          "optimizer: parameter set changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto pi = params.begin();
  auto gi = grads.begin();
  auto mi = m_.begin();
  auto vi = v_.begin();
  for (; pi != params.end(); ++pi, ++gi, ++mi, ++vi) {
    Tensor& p = pi->value;
    const Tensor& g = gi->value;
    require(g.shape() == p.shape(), ErrorCode::kShapeMismatch,
            fmt::format("optimizer: gradient for '{}' is {}, parameter is {}", pi->name,
                        shape_str(g.shape()), shape_str(p.shape())));
    for (std::size_t i = 0; i < p.numel(); ++i) {
      mi->value[i] = cfg_.beta1 * mi->value[i] + (1.0 - cfg_.beta1) * g[i];
      vi->value[i] = cfg_.beta2 * vi->value[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mh = mi->value[i] / bc1;
      const double vh = vi->value[i] / bc2;
      p[i] -= cfg_.lr * cfg_.weight_decay * p[i];
      p[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

double clip_grad_norm(const std::vector<ParamSet*>& grads, double max_norm) {
  require(max_norm > 0.0, ErrorCode::kInvalidArgument,
          fmt::format("clip norm must be positive (got {})", max_norm));
  double sq = 0.0;
  for (const ParamSet* g : grads) sq += squared_norm(*g);
  const double norm = std::sqrt(sq);
  require(std::isfinite(norm), ErrorCode::kNonFinite, "gradient norm is not finite");
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (ParamSet* g : grads) {
      for (auto& p : *g) p.value *= s;
    }
  }
  return norm;
}

}  // namespace egogen::gen
