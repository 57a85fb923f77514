// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "egogen/tensor.hpp"

// Minimal reverse-mode differentiation over Tensors. A Tape records every
// operation in creation order; backward() walks it once in reverse. Matrices
// are rank-2 row-major tensors; scalars have an empty shape.
namespace egogen::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Accumulated gradient of a leaf. Zero-filled tensor of the value's shape
  /// if the node was never reached. Interior gradients are released once
  /// propagated, so repeated backward() calls accumulate only into leaves.
  Tensor grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that receives a gradient.
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  /// Seeds d(root)/d(root) = 1; root must be a scalar.
  void backward(const Var& root);
  /// Seeds the root's gradient with `seed` (same shape as the root).
  void backward(const Var& root, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  struct Node {
    Tensor value;
    Tensor grad;  // empty until something flows in
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    std::function<void(Tape&, std::size_t)> backward;
  };
  Var push(Tensor value, std::vector<std::size_t> parents,
           std::function<void(Tape&, std::size_t)> backward);
  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  /// Gradient buffer of `id`, allocated on first use; nullptr when the node
  /// does not require a gradient.
  Tensor* grad_buffer(std::size_t id);

 private:
  std::vector<Node> nodes_;
};

// Elementwise, same shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var silu(const Var& a);

/// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);
/// a [m,n] plus row vector b [n] on every row.
Var add_row(const Var& a, const Var& b);
/// out.flat[i] = src.flat[index[i]], or 0 where index[i] < 0. The backward
/// pass scatter-adds. Covers reshapes, slices, concatenation and patching.
Var gather(const Var& src, std::shared_ptr<const std::vector<std::int64_t>> index, Shape shape);
Var reshape(const Var& a, Shape shape);
/// Flat concatenation. Concatenating row-major matrices of equal width
/// stacks their rows.
Var concat(const std::vector<Var>& parts, Shape shape);
/// Mean of squares over all elements, as a scalar.
Var mean_square(const Var& a);

/// Temporal attention, one independent sequence per spatial column.
/// Rows of q are ordered (frame, column) with `columns` columns per frame;
/// k and v likewise. Query frame t sits at absolute position t + q_offset;
/// key frame s at position s. With `causal`, queries attend to keys at
/// positions <= their own.
Var temporal_attention(const Var& q, const Var& k, const Var& v, std::size_t columns,
                       std::size_t q_offset, bool causal);

}  // namespace egogen::ad
