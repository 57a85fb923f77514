// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/autograd.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "egogen/error.hpp"
#include "egogen/simd/kernels.hpp"

namespace egogen::ad {
namespace {

Tape& same_tape(std::initializer_list<const Var*> vars) {
  Tape* t = nullptr;
  for (const Var* v : vars) {
    require(v->valid(), ErrorCode::kInvalidArgument, "autograd: use of an empty Var");
    if (!t) t = v->tape();
    require(t == v->tape(), ErrorCode::kInvalidArgument, "autograd: Vars from different tapes");
  }
  return *t;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          fmt::format("{}: {} vs {}", op, shape_str(a.shape()), shape_str(b.shape())));
}

void require_matrix(const Var& a, const char* op) {
  require(a.shape().size() == 2, ErrorCode::kShapeMismatch,
          fmt::format("{}: expected a matrix, got {}", op, shape_str(a.shape())));
}

}  // namespace

const Tensor& Var::value() const { return tape_->node(id_).value; }

Tensor Var::grad() const {
  const auto& n = tape_->node(id_);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.shape());
  return n.grad;
}

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Tensor value, std::vector<std::size_t> parents,
               std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.value = std::move(value);
  for (auto p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

void Tape::backward(const Var& root) {
  require(root.value().numel() == 1, ErrorCode::kShapeMismatch,
          "backward: root is not a scalar; pass a seed");
  backward(root, Tensor(root.shape(), 1.0));
}

void Tape::backward(const Var& root, const Tensor& seed) {
  require(root.tape() == this, ErrorCode::kInvalidArgument, "backward: Var from another tape");
  require(seed.shape() == root.shape(), ErrorCode::kShapeMismatch,
          "backward: seed shape " + shape_str(seed.shape()) + " vs root " +
              shape_str(root.shape()));
  Tensor* g = grad_buffer(root.id());
  if (!g) return;
  *g += seed;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) {
      n.backward(*this, i);
      // Consumed; a later backward on this tape must not propagate it again.
      nodes_[i].grad = Tensor();
    }
  }
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor g = tp.node(self).grad;
    if (Tensor* ga = tp.grad_buffer(ia)) *ga += g;
    if (Tensor* gb = tp.grad_buffer(ib)) *gb += g;
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  out -= b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor g = tp.node(self).grad;
    if (Tensor* ga = tp.grad_buffer(ia)) *ga += g;
    if (Tensor* gb = tp.grad_buffer(ib)) *gb -= g;
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.node(self).grad;
    if (Tensor* ga = tp.grad_buffer(ia)) {
      const Tensor& bv = tp.node(ib).value;
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = tp.grad_buffer(ib)) {
      const Tensor& av = tp.node(ia).value;
      for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tape& t = same_tape({&a});
  Tensor out = a.value();
  out *= s;
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia, s](Tape& tp, std::size_t self) {
    const Tensor& g = tp.node(self).grad;
    if (Tensor* ga = tp.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += s * g[i];
    }
  });
}

Var silu(const Var& a) {
  Tape& t = same_tape({&a});
  Tensor out = a.value();
  for (auto& x : out.values()) x = x / (1.0 + std::exp(-x));
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor& g = tp.node(self).grad;
    Tensor* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const Tensor& x = tp.node(ia).value;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-x[i]));
      (*ga)[i] += g[i] * s * (1.0 + x[i] * (1.0 - s));
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  require(b.shape()[0] == k, ErrorCode::kShapeMismatch,
          fmt::format("matmul: {} x {}", shape_str(a.shape()), shape_str(b.shape())));
  const auto& kt = simd::active();
  Tensor out({m, n});
  const double* A = a.value().data();
  const double* B = b.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) kt.axpy(A[i * k + p], B + p * n, row, n);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const auto& kt = simd::active();
    const Tensor& g = tp.node(self).grad;
    const double* A = tp.node(ia).value.data();
    const double* B = tp.node(ib).value.data();
    if (Tensor* ga = tp.grad_buffer(ia)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          (*ga)[i * k + p] += kt.dot(g.data() + i * n, B + p * n, n);
        }
      }
    }
    if (Tensor* gb = tp.grad_buffer(ib)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          kt.axpy(A[i * k + p], g.data() + i * n, gb->data() + p * n, n);
        }
      }
    }
  });
}

Var add_row(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  require_matrix(a, "add_row");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  require(b.value().numel() == n, ErrorCode::kShapeMismatch,
          fmt::format("add_row: {} + {}", shape_str(a.shape()), shape_str(b.shape())));
  Tensor out = a.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b.value()[j];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib, m, n](Tape& tp, std::size_t self) {
    const Tensor g = tp.node(self).grad;
    if (Tensor* ga = tp.grad_buffer(ia)) *ga += g;
    if (Tensor* gb = tp.grad_buffer(ib)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
      }
    }
  });
}

Var gather(const Var& src, std::shared_ptr<const std::vector<std::int64_t>> index, Shape shape) {
  Tape& t = same_tape({&src});
  require(index && index->size() == shape_numel(shape), ErrorCode::kShapeMismatch,
          "gather: index length does not match output shape " + shape_str(shape));
  const auto n_src = static_cast<std::int64_t>(src.value().numel());
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const std::int64_t j = (*index)[i];
    require(j < n_src, ErrorCode::kInvalidArgument, "gather: index out of range");
    out[i] = j < 0 ? 0.0 : src.value()[static_cast<std::size_t>(j)];
  }
  const std::size_t is = src.id();
  return t.push(std::move(out), {is}, [is, index](Tape& tp, std::size_t self) {
    Tensor* gs = tp.grad_buffer(is);
    if (!gs) return;
    const Tensor& g = tp.node(self).grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const std::int64_t j = (*index)[i];
      if (j >= 0) (*gs)[static_cast<std::size_t>(j)] += g[i];
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tape& t = same_tape({&a});
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    Tensor* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const Tensor& g = tp.node(self).grad;
    for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i];
  });
}

Var concat(const std::vector<Var>& parts, Shape shape) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat: no inputs");
  Tape& t = *parts.front().tape();
  std::vector<std::size_t> ids;
  std::vector<double> data;
  for (const auto& p : parts) {
    same_tape({&parts.front(), &p});
    ids.push_back(p.id());
    data.insert(data.end(), p.value().storage().begin(), p.value().storage().end());
  }
  Tensor out(std::move(shape), std::move(data));
  return t.push(std::move(out), ids, [ids](Tape& tp, std::size_t self) {
    const Tensor& g = tp.node(self).grad;
    std::size_t off = 0;
    for (auto id : ids) {
      const std::size_t n = tp.node(id).value.numel();
      if (Tensor* gp = tp.grad_buffer(id)) {
        for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var mean_square(const Var& a) {
  Tape& t = same_tape({&a});
  const std::size_t n = a.value().numel();
  require(n > 0, ErrorCode::kInvalidArgument, "mean_square of an empty tensor");
  double s = 0.0;
  for (double x : a.value().values()) s += x * x;
  Tensor out(Shape{}, s / static_cast<double>(n));
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia, n](Tape& tp, std::size_t self) {
    Tensor* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const double g = tp.node(self).grad[0] * 2.0 / static_cast<double>(n);
    const Tensor& x = tp.node(ia).value;
    for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g * x[i];
  });
}

Var temporal_attention(const Var& q, const Var& k, const Var& v, std::size_t columns,
                       std::size_t q_offset, bool causal) {
  Tape& t = same_tape({&q, &k, &v});
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_same_shape(k, v, "attention");
  const std::size_t d = q.shape()[1];
  require(k.shape()[1] == d && columns > 0 && q.shape()[0] % columns == 0 &&
              k.shape()[0] % columns == 0,
          ErrorCode::kShapeMismatch,
          fmt::format("attention: q {} k {} with {} columns", shape_str(q.shape()),
                      shape_str(k.shape()), columns));
  const std::size_t tq = q.shape()[0] / columns, tk = k.shape()[0] / columns;
  require(!causal || q_offset + tq <= tk, ErrorCode::kShapeMismatch,
          "attention: causal queries beyond the last key frame");
  const double sc = 1.0 / std::sqrt(static_cast<double>(d));
  const auto& kt = simd::active();

  // probs[(t*columns + c)*tk + s]
  auto probs = std::make_shared<std::vector<double>>(tq * columns * tk, 0.0);
  Tensor out({tq * columns, d});
  const double* Q = q.value().data();
  const double* K = k.value().data();
  const double* V = v.value().data();
  for (std::size_t tt = 0; tt < tq; ++tt) {
    const std::size_t limit = causal ? tt + q_offset + 1 : tk;
    for (std::size_t c = 0; c < columns; ++c) {
      const std::size_t row = tt * columns + c;
      double* p = probs->data() + row * tk;
      double mx = -INFINITY;
      for (std::size_t s = 0; s < limit; ++s) {
        p[s] = sc * kt.dot(Q + row * d, K + (s * columns + c) * d, d);
        mx = std::max(mx, p[s]);
      }
      double z = 0.0;
      for (std::size_t s = 0; s < limit; ++s) {
        p[s] = std::exp(p[s] - mx);
        z += p[s];
      }
      for (std::size_t s = 0; s < limit; ++s) {
        p[s] /= z;
        kt.axpy(p[s], V + (s * columns + c) * d, out.data() + row * d, d);
      }
    }
  }

  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return t.push(std::move(out), {iq, ik, iv},
                [=](Tape& tp, std::size_t self) {
                  const auto& kt = simd::active();
                  const Tensor& g = tp.node(self).grad;
                  const double* Q = tp.node(iq).value.data();
                  const double* K = tp.node(ik).value.data();
                  const double* V = tp.node(iv).value.data();
                  Tensor* gq = tp.grad_buffer(iq);
                  Tensor* gk = tp.grad_buffer(ik);
                  Tensor* gv = tp.grad_buffer(iv);
                  std::vector<double> gs(tk);
                  for (std::size_t tt = 0; tt < tq; ++tt) {
                    const std::size_t limit = causal ? tt + q_offset + 1 : tk;
                    for (std::size_t c = 0; c < columns; ++c) {
                      const std::size_t row = tt * columns + c;
                      const double* p = probs->data() + row * tk;
                      const double* grow = g.data() + row * d;
                      double acc = 0.0;
                      for (std::size_t s = 0; s < limit; ++s) {
                        const std::size_t krow = s * columns + c;
                        if (gv) kt.axpy(p[s], grow, gv->data() + krow * d, d);
                        gs[s] = kt.dot(grow, V + krow * d, d);
                        acc += p[s] * gs[s];
                      }
                      for (std::size_t s = 0; s < limit; ++s) {
                        const std::size_t krow = s * columns + c;
                        const double ds = sc * p[s] * (gs[s] - acc);
                        if (gq) kt.axpy(ds, K + krow * d, gq->data() + row * d, d);
                        if (gk) kt.axpy(ds, Q + row * d, gk->data() + krow * d, d);
                      }
                    }
                  }
                });
}

}  // namespace egogen::ad
