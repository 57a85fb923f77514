// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/params.hpp"

#include <algorithm>

#include "egogen/error.hpp"

namespace egogen {

Tensor& ParamSet::add(std::string name, Tensor value) {
  require(!contains(name), ErrorCode::kInvalidArgument, "duplicate parameter '" + name + "'");
  params_.push_back(Param{std::move(name), std::move(value)});
  return params_.back().value;
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param& p) { return p.name == name; });
}

Tensor& ParamSet::get(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  fail(ErrorCode::kInvalidArgument, "unknown parameter '" + name + "'");
}

const Tensor& ParamSet::get(const std::string& name) const {
  return const_cast<ParamSet*>(this)->get(name);
}

std::size_t ParamSet::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& p : params_) out.add(p.name, Tensor(p.value.shape()));
  return out;
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : params_) {
    for (char c : p.name) h = checksum_combine(h, static_cast<unsigned char>(c));
    h = checksum_combine(h, egogen::checksum(p.value));
  }
  return h;
}

bool ParamSet::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const Param& p) { return p.value.all_finite(); });
}

double squared_norm(const ParamSet& set) {
  double s = 0.0;
  for (const auto& p : set) {
    for (double v : p.value.values()) s += v * v;
  }
  return s;
}

VarSet::VarSet(ad::Tape& tape, const ParamSet& params, bool trainable) {
  for (const auto& p : params) {
    vars_.emplace(p.name, trainable ? tape.leaf(p.value) : tape.constant(p.value));
  }
}

const ad::Var& VarSet::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  require(it != vars_.end(), ErrorCode::kInvalidArgument, "unbound parameter '" + name + "'");
  return it->second;
}

ParamSet VarSet::grads(const ParamSet& like) const {
  ParamSet out;
  for (const auto& p : like) {
    auto it = vars_.find(p.name);
    if (it != vars_.end() && it->second.requires_grad()) {
      out.add(p.name, it->second.grad());
    } else {
      out.add(p.name, Tensor(p.value.shape()));
    }
  }
  return out;
}

Tensor randn(Shape shape, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace egogen
