// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "egogen/autograd.hpp"
#include "egogen/tensor.hpp"

namespace egogen {

struct Param {
  std::string name;
  Tensor value;
};

/// Ordered collection of named tensors. Order is insertion order and is what
/// checksums, checkpoints and optimizer state follow.
class ParamSet {
 public:
  Tensor& add(std::string name, Tensor value);
  bool contains(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  std::size_t numel() const;
  std::vector<Param>::iterator begin() { return params_.begin(); }
  std::vector<Param>::iterator end() { return params_.end(); }
  std::vector<Param>::const_iterator begin() const { return params_.begin(); }
  std::vector<Param>::const_iterator end() const { return params_.end(); }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  std::uint64_t checksum() const;
  bool all_finite() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Param> params_;
};

/// Sum of squares over every element of every tensor.
double squared_norm(const ParamSet& set);

/// Params bound onto a tape, by name.
class VarSet {
 public:
  VarSet() = default;
  /// Leaves when `trainable`, constants otherwise.
  VarSet(ad::Tape& tape, const ParamSet& params, bool trainable);
  const ad::Var& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  /// Gradients in the order of `like`; zeros for untouched or constant entries.
  ParamSet grads(const ParamSet& like) const;

 private:
  std::map<std::string, ad::Var> vars_;
};

/// N(0, stddev^2) tensor from `rng`.
Tensor randn(Shape shape, std::mt19937_64& rng, double stddev = 1.0);

}  // namespace egogen
