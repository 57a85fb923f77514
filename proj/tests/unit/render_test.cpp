// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "egogen/error.hpp"
#include "egogen/render.hpp"
#include "oracles/raster.hpp"
#include "render_fixtures.hpp"
#include "support.hpp"

using namespace egogen;
using namespace egogen::render;

using testing::is_style_color;
using testing::make_mesh;
using testing::random_mesh;

TEST_CASE("project_vertices fixtures") {
  hand::HandMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices << 0, 0, 1, 0.1, 0, 1, 0, 0, -1;
  mesh.faces = std::make_shared<const std::vector<hand::Face>>(std::vector<hand::Face>{{0, 1, 2}});
  const auto p = project_vertices(mesh, {100, 100, 50, 50}, Handedness::kLeft);
  CHECK(p.points(0, 0) == 50.0);
  CHECK(p.points(0, 1) == 50.0);
  CHECK(p.depths[0] == 1.0);
  CHECK(p.points(1, 0) == doctest::Approx(60.0).epsilon(1e-15));
  CHECK(p.points(1, 1) == 50.0);
  CHECK(p.valid[2] == 0);
  CHECK(p.valid_count() == 2);
  // The only triangle touches the behind-camera vertex.
  const auto img = render_control(p, std::nullopt, 100, 100);
  CHECK(img == RgbImage(100, 100));
}

TEST_CASE("no hands gives a black frame") {
  CHECK(render_control(std::nullopt, std::nullopt, 8, 12) == RgbImage(8, 12));
}

TEST_CASE("axis-aligned triangle matches the half-plane oracle") {
  const auto m = make_mesh({{2, 3, 1}, {12, 3, 1}, {2, 13, 1}}, {{0, 1, 2}}, Handedness::kLeft);
  const auto layers = render_layers(m, std::nullopt, 16, 16, {});
  const auto want = oracle::coverage(m, 16, 16);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    CHECK((layers.silhouette_owner[i] == kLeftHand) == (want[i] == 1));
    covered += want[i];
  }
  // Right isoceles triangle with legs of 10: pixels with x + y <= 15, x >= 2, y >= 3,
  // minus the hypotenuse pixels excluded by the top-left rule.
  CHECK(covered > 40);
  CHECK(covered < 66);
}

TEST_CASE("shared edges are filled exactly once") {
  // A square split along its diagonal; every interior pixel belongs to one triangle.
  auto m = make_mesh({{1.5, 1.5, 1}, {9.5, 1.5, 1}, {9.5, 9.5, 1}, {1.5, 9.5, 1}},
                     {{0, 1, 2}, {0, 2, 3}}, Handedness::kLeft);
  const auto layers = render_layers(m, std::nullopt, 12, 12, {});
  std::size_t n = 0;
  for (auto o : layers.silhouette_owner) n += (o == kLeftHand);
  CHECK(n == 64);
}

TEST_CASE("nearer hand wins overlaps") {
  const auto left = make_mesh({{0, 0, 1.0}, {20, 0, 1.0}, {0, 20, 1.0}}, {{0, 1, 2}}, Handedness::kLeft);
  const auto right = make_mesh({{4, 4, 2.0}, {24, 4, 2.0}, {4, 24, 2.0}}, {{0, 1, 2}}, Handedness::kRight);
  const RenderStyle style;
  const auto layers = render_layers(left, right, 24, 24, style);
  const auto a = oracle::coverage(left, 24, 24), b = oracle::coverage(right, 24, 24);
  std::size_t overlap = 0;
  for (std::size_t y = 0; y < 24; ++y) {
    for (std::size_t x = 0; x < 24; ++x) {
      const std::size_t i = y * 24 + x;
      if (a[i] && b[i]) {
        ++overlap;
        CHECK(layers.silhouette_owner[i] == kLeftHand);
        const Rgb c = layers.image.get(x, y);
        CHECK((c == style.silhouette_left || c == style.wire_left));
      }
    }
  }
  CHECK(overlap > 20);
  // Swapping the depths hands the overlap to the right hand.
  auto l2 = left, r2 = right;
  for (auto& d : l2.depths) d = 2.0;
  for (auto& d : r2.depths) d = 1.0;
  const auto swapped = render_layers(l2, r2, 24, 24, style);
  for (std::size_t i = 0; i < 576; ++i)
    if (a[i] && b[i]) CHECK(swapped.silhouette_owner[i] == kRightHand);
}

TEST_CASE("random meshes: oracle coverage, wire containment, colour partition") {
  std::mt19937_64 rng(31);
  const RenderStyle style;
  for (int trial = 0; trial < 30; ++trial) {
    const auto left = random_mesh(rng, 32, Handedness::kLeft);
    const auto right = random_mesh(rng, 32, Handedness::kRight);
    const auto layers = render_layers(left, right, 32, 32, style);
    const auto a = oracle::coverage(left, 32, 32), b = oracle::coverage(right, 32, 32);
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) {
        const std::size_t i = y * 32 + x;
        CHECK((layers.silhouette_owner[i] != kNoHand) == (a[i] || b[i]));
        if (a[i] && !b[i]) CHECK(layers.silhouette_owner[i] == kLeftHand);
        if (b[i] && !a[i]) CHECK(layers.silhouette_owner[i] == kRightHand);
        const Rgb c = layers.image.get(x, y);
        if (c != Rgb{}) {
          CHECK(is_style_color(c, style));
        }
        if (layers.silhouette_owner[i] == kLeftHand && layers.wire_owner[i] == kNoHand)
          CHECK(c == style.silhouette_left);
        if (layers.wire_owner[i] != kNoHand) {
          bool near = false;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = static_cast<int>(x) + dx, yy = static_cast<int>(y) + dy;
              if (xx >= 0 && yy >= 0 && xx < 32 && yy < 32 &&
                  layers.silhouette_owner[static_cast<std::size_t>(yy * 32 + xx)] != kNoHand)
                near = true;
            }
          CHECK(near);
        }
      }
    }
    CHECK(render_control(left, right, 32, 32, style) == layers.image);
  }
}

TEST_CASE("wider lines still draw") {
  const auto m = make_mesh({{2, 3, 1}, {12, 3, 1}, {2, 13, 1}}, {{0, 1, 2}}, Handedness::kLeft);
  RenderStyle style;
  style.line_width = 3;
  const auto layers = render_layers(m, std::nullopt, 16, 16, style);
  std::size_t wires = 0;
  for (auto o : layers.wire_owner) wires += (o == kLeftHand);
  CHECK(wires > 20);
  style.line_width = 0;
  CHECK_THROWS_AS(render_control(m, std::nullopt, 16, 16, style), Error);
}

TEST_CASE("render_sequence") {
  const auto model = hand::make_synthetic_model(0);
  camera::Frame cam;
  cam.K = {80, 80, 31.5, 31.5};
  SUBCASE("one frame, no hands") {
    const auto frames = render_sequence(model, {FrameHands{}}, {cam}, 64, 64);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0] == RgbImage(64, 64));
  }
  HandParams hp;
  hp.translation.t = hand::Vec3(0, 0, 0.5);
  SUBCASE("constant inputs give identical frames") {
    std::vector<FrameHands> params(3, FrameHands{hp, std::nullopt});
    const auto frames = render_sequence(model, params, {cam, cam, cam}, 64, 64);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0] == frames[1]);
    CHECK(frames[1] == frames[2]);
    CHECK(frames[0] != RgbImage(64, 64));
  }
  SUBCASE("translation along +x moves the silhouette right") {
    std::vector<FrameHands> params;
    for (int i = 0; i < 4; ++i) {
      HandParams p = hp;
      p.translation.t.x() = -0.03 + 0.02 * i;
      params.push_back({std::nullopt, p});
    }
    const auto frames = render_sequence(model, params, {cam, cam, cam, cam}, 64, 64);
    double prev = -1.0;
    for (const auto& f : frames) {
      double sx = 0, n = 0;
      for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x)
          if (f.get(x, y) != Rgb{}) {
            sx += static_cast<double>(x);
            n += 1;
          }
      REQUIRE(n > 0);
      CHECK(sx / n > prev);
      prev = sx / n;
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(render_sequence(model, {FrameHands{}, FrameHands{}}, {cam}, 64, 64), Error);
  }
}
