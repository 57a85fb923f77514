// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <functional>

#include "egogen/autograd.hpp"
#include "egogen/error.hpp"
#include "egogen/params.hpp"
#include "oracles/finite_diff.hpp"
#include "support.hpp"

using namespace egogen;
using namespace egogen::ad;

namespace {

using Build = std::function<Var(Tape&, const std::vector<Var>&)>;

// Checks d<seed, f(inputs)>/d inputs against central differences.
double worst_op_error(const std::vector<Tensor>& inputs, const Build& f, std::uint64_t seed_rng) {
  std::mt19937_64 rng(seed_rng);
  Tensor seed;
  std::vector<Tensor> grads;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
    Var out = f(tape, leaves);
    seed = randn(out.shape(), rng);
    tape.backward(out, seed);
    for (const auto& l : leaves) grads.push_back(l.grad());
  }
  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    const Tensor& y = f(tape, vars).value();
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += seed[i] * y[i];
    return s;
  };
  double worst = 0.0;
  std::vector<Tensor> xs = inputs;
  const double h = 1e-5;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t i = 0; i < xs[k].numel(); ++i) {
      const double o = xs[k][i];
      xs[k][i] = o + h;
      const double up = eval(xs);
      xs[k][i] = o - h;
      const double down = eval(xs);
      xs[k][i] = o;
      worst = std::max(worst, oracle::relative_error(grads[k][i], (up - down) / (2 * h), 1e-6));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise ops and reductions") {
  std::mt19937_64 rng(61);
  const Tensor a = randn({3, 4}, rng), b = randn({3, 4}, rng);
  CHECK(worst_op_error({a, b}, [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); }, 1) < 1e-5);
  CHECK(worst_op_error({a, b}, [](Tape&, const std::vector<Var>& v) { return sub(v[0], v[1]); }, 2) < 1e-5);
  CHECK(worst_op_error({a, b}, [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }, 3) < 1e-5);
  CHECK(worst_op_error({a}, [](Tape&, const std::vector<Var>& v) { return scale(v[0], -1.7); }, 4) < 1e-5);
  CHECK(worst_op_error({a}, [](Tape&, const std::vector<Var>& v) { return silu(v[0]); }, 5) < 1e-5);
  CHECK(worst_op_error({a}, [](Tape&, const std::vector<Var>& v) { return mean_square(v[0]); }, 6) < 1e-5);
}

TEST_CASE("matrix ops") {
  std::mt19937_64 rng(62);
  const Tensor a = randn({3, 4}, rng), b = randn({4, 2}, rng), r = randn({4}, rng);
  CHECK(worst_op_error({a, b}, [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }, 7) < 1e-5);
  CHECK(worst_op_error({a, r}, [](Tape&, const std::vector<Var>& v) { return add_row(v[0], v[1]); }, 8) < 1e-5);
  Tape tape;
  CHECK_THROWS_AS(matmul(tape.leaf(a), tape.leaf(a)), Error);
}

TEST_CASE("gather, reshape and concat") {
  std::mt19937_64 rng(63);
  const Tensor a = randn({2, 3}, rng), b = randn({1, 3}, rng);
  auto idx = std::make_shared<const std::vector<std::int64_t>>(std::vector<std::int64_t>{5, 0, -1, 0, 2, 3, 3});
  CHECK(worst_op_error({a}, [idx](Tape&, const std::vector<Var>& v) { return gather(v[0], idx, {7}); }, 9) < 1e-5);
  CHECK(worst_op_error({a}, [](Tape&, const std::vector<Var>& v) { return reshape(v[0], {3, 2}); }, 10) < 1e-5);
  CHECK(worst_op_error({a, b}, [](Tape&, const std::vector<Var>& v) { return concat({v[0], v[1]}, {3, 3}); }, 11) < 1e-5);

  Tape tape;
  const Var g = gather(tape.constant(a), idx, {7});
  CHECK(g.value()[0] == a[5]);
  CHECK(g.value()[2] == 0.0);
  const Var c = concat({tape.constant(a), tape.constant(b)}, {3, 3});
  CHECK(c.value()[6] == b[0]);
}

TEST_CASE("temporal attention") {
  std::mt19937_64 rng(64);
  const std::size_t cols = 2, d = 3;
  const Tensor q = randn({3 * cols, d}, rng), k = randn({3 * cols, d}, rng), v = randn({3 * cols, d}, rng);
  for (bool causal : {false, true}) {
    CHECK(worst_op_error({q, k, v},
                         [&](Tape&, const std::vector<Var>& x) {
                           return temporal_attention(x[0], x[1], x[2], cols, 0, causal);
                         },
                         12) < 1e-5);
  }
  SUBCASE("offset queries over a longer key sequence") {
    const Tensor q1 = randn({2 * cols, d}, rng), k5 = randn({5 * cols, d}, rng), v5 = randn({5 * cols, d}, rng);
    CHECK(worst_op_error({q1, k5, v5},
                         [&](Tape&, const std::vector<Var>& x) {
                           return temporal_attention(x[0], x[1], x[2], cols, 2, true);
                         },
                         13) < 1e-5);
  }
  SUBCASE("causal rows ignore later keys") {
    Tape tape;
    const Var out = temporal_attention(tape.constant(q), tape.constant(k), tape.constant(v), cols, 0, true);
    Tensor k2 = k, v2 = v;
    for (std::size_t i = 2 * cols * d; i < k2.numel(); ++i) {
      k2[i] += 1.0;
      v2[i] -= 2.0;
    }
    const Var out2 = temporal_attention(tape.constant(q), tape.constant(k2), tape.constant(v2), cols, 0, true);
    for (std::size_t i = 0; i < 2 * cols * d; ++i) CHECK(out.value()[i] == out2.value()[i]);
    // The first query sees only itself: output equals its own value row.
    for (std::size_t i = 0; i < cols * d; ++i) CHECK(out.value()[i] == doctest::Approx(v[i]).epsilon(1e-14));
  }
}

TEST_CASE("tape bookkeeping") {
  Tape tape;
  const Var x = tape.leaf(Tensor({2}, std::vector<double>{1.0, 2.0}));
  const Var c = tape.constant(Tensor({2}, std::vector<double>{3.0, 4.0}));
  const Var y = mean_square(mul(x, c));
  CHECK(y.value()[0] == doctest::Approx((9.0 + 64.0) / 2.0));
  tape.backward(y);
  const Tensor g1 = x.grad();
  CHECK(g1[0] == doctest::Approx(9.0));
  CHECK(g1[1] == doctest::Approx(32.0));
  CHECK_FALSE(c.requires_grad());
  CHECK(c.grad() == Tensor({2}));
  // A second backward adds the same leaf gradient once more, no interior reuse.
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(18.0));
  CHECK(x.grad()[1] == doctest::Approx(64.0));
  CHECK_THROWS_AS(tape.backward(mul(x, c)), Error);
  CHECK_THROWS_AS(add(x, tape.leaf(Tensor({3}))), Error);
}
