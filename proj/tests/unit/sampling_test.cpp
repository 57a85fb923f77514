// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "egogen/error.hpp"
#include "egogen/sampling.hpp"
#include "model_fixtures.hpp"

using namespace egogen;
using namespace egogen::gen;

TEST_CASE("constant field lands on its endpoint") {
  std::mt19937_64 rng(81);
  const Tensor z0 = randn({2, 3, 2, 2}, rng), eps = randn({2, 3, 2, 2}, rng);
  const Tensor v = velocity_target(z0, eps);
  FunctionField field([&](const Tensor&, double) { return v; });
  Conditioning c;
  c.z_hand = Tensor(z0.shape());
  c.z_ref = Tensor(z0.shape());
  const Tensor one = euler_integrate(field, eps, c, 1);
  CHECK(max_abs_diff(one, z0) <= 1e-15);
  CHECK(max_abs_diff(euler_integrate(field, eps, c, 2), one) <= 1e-15);
  CHECK(max_abs_diff(euler_integrate(field, eps, c, 7), z0) <= 1e-14);
  CHECK_THROWS_AS(euler_integrate(field, eps, c, 0), Error);
}

TEST_CASE("linear field integrates exactly along the straight path") {
  // v(z, tau) = (z - mu) / tau pulls straight lines through mu at tau = 0.
  std::mt19937_64 rng(82);
  const Tensor mu = randn({1, 2, 2, 2}, rng), eps = randn({1, 2, 2, 2}, rng);
  FunctionField field([&](const Tensor& z, double tau) { return (1.0 / tau) * (z - mu); });
  Conditioning c;
  c.z_hand = Tensor(mu.shape());
  c.z_ref = Tensor(mu.shape());
  for (std::size_t steps : {1u, 3u, 10u}) CHECK(max_abs_diff(euler_integrate(field, eps, c, steps), mu) <= 1e-12);
}

TEST_CASE("seeded noise") {
  const Tensor a = seeded_noise({2, 3, 4}, 5);
  CHECK(a == seeded_noise({2, 3, 4}, 5));
  CHECK(a != seeded_noise({2, 3, 4}, 6));
  double mean = 0.0, var = 0.0;
  const Tensor big = seeded_noise({20000}, 1);
  for (std::size_t i = 0; i < big.numel(); ++i) mean += big[i];
  mean /= 20000.0;
  for (std::size_t i = 0; i < big.numel(); ++i) var += (big[i] - mean) * (big[i] - mean);
  var /= 20000.0;
  CHECK(std::abs(mean) < 0.03);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  CHECK(block_noise({2, 2}, 3, 0) != block_noise({2, 2}, 3, 1));
  CHECK(block_noise({2, 2}, 3, 1) == block_noise({2, 2}, 3, 1));
}

TEST_CASE("model sampling is deterministic") {
  std::mt19937_64 rng(83);
  auto m = testing::random_model(rng, 2, 8, 1);
  const auto c = testing::random_conditioning(rng, 2, 3, 2, 2);
  const Tensor a = euler_sample(m.den, &m.adapter, c, 4, 11);
  CHECK(a.shape() == Shape{2, 3, 2, 2});
  CHECK(a == euler_sample(m.den, &m.adapter, c, 4, 11));
  CHECK(a != euler_sample(m.den, &m.adapter, c, 4, 12));
  CHECK(euler_sample(DenoiserField(m.den, &m.adapter, false), c, 4, 11) == a);
}

TEST_CASE("rollout") {
  std::mt19937_64 rng(84);
  auto m = testing::random_model(rng, 2, 8, 2);
  const auto c = testing::random_conditioning(rng, 2, 12, 2, 2);
  RolloutConfig rc;
  rc.seed = 17;

  SUBCASE("shape and cache") {
    SequenceStream s(c);
    KVCache cache;
    const Tensor v = ar_rollout(m.den, &m.adapter, s, rc, cache);
    CHECK(v.shape() == Shape{2, 12, 2, 2});
    CHECK(cache.frames == 12);
    CHECK(cache.block_starts == std::vector<std::size_t>{0, 3, 6, 9});
    CHECK(s.consumed() == 12);
    SequenceStream s2(c);
    KVCache cache2;
    CHECK(ar_rollout(m.den, &m.adapter, s2, rc, cache2) == v);
  }
  SUBCASE("matches full recomputation") {
    CHECK(testing::rollout_vs_recompute(m, c, rc) <= 1e-10);
    rc.block_frames = 2;
    rc.total_blocks = 6;
    rc.denoise_steps = 3;
    CHECK(testing::rollout_vs_recompute(m, c, rc) <= 1e-10);
  }
  SUBCASE("one block is plain causal sampling") {
    rc.total_blocks = 1;
    SequenceStream s(c);
    KVCache cache;
    const Tensor v = ar_rollout(m.den, &m.adapter, s, rc, cache);
    const Tensor ref = euler_integrate(DenoiserField(m.den, &m.adapter, true),
                                       block_noise({2, 3, 2, 2}, rc.seed, 0), c.slice(0, 3), rc.denoise_steps);
    CHECK(max_abs_diff(v, ref) <= 1e-12);
  }
  SUBCASE("earlier blocks do not depend on later conditioning") {
    auto c2 = c;
    for (std::size_t t = 6; t < 12; ++t) c2.packs[t] = randn(c2.packs[t].shape(), rng);
    SequenceStream a(c), b(c2);
    KVCache ca, cb;
    const Tensor va = ar_rollout(m.den, &m.adapter, a, rc, ca), vb = ar_rollout(m.den, &m.adapter, b, rc, cb);
    CHECK(slice_frames(va, 0, 6) == slice_frames(vb, 0, 6));
    CHECK(slice_frames(va, 6, 6) != slice_frames(vb, 6, 6));
  }
  SUBCASE("stream runs out") {
    rc.total_blocks = 5;
    SequenceStream s(c);
    KVCache cache;
    CHECK_THROWS_AS(ar_rollout(m.den, &m.adapter, s, rc, cache), Error);
  }
  SUBCASE("bad config") {
    rc.block_frames = 0;
    SequenceStream s(c);
    KVCache cache;
    CHECK_THROWS_AS(ar_rollout(m.den, &m.adapter, s, rc, cache), Error);
  }
}
