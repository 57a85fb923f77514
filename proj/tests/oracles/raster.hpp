// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Exhaustive coverage: every pixel centre is tested against every triangle
// with three half-planes, no bounding boxes. Pixel (x, y) samples the image
// plane at (x, y). Points exactly on an edge count only for top and left
// edges of the counter-clockwise (in y-down coordinates) triangle.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "egogen/render.hpp"

namespace oracle {

struct Pt {
  double x, y;
};

inline double cross(Pt a, Pt b, Pt p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

inline bool covers(Pt a, Pt b, Pt c, Pt p) {
  double area = cross(a, b, c);
  if (area == 0.0) return false;
  if (area < 0.0) std::swap(b, c);
  auto owns = [](Pt s, Pt t, double e) {
    if (e > 0.0) return true;
    if (e < 0.0) return false;
    const double dy = t.y - s.y;
    return dy < 0.0 || (dy == 0.0 && t.x > s.x);
  };
  return owns(a, b, cross(a, b, p)) && owns(b, c, cross(b, c, p)) && owns(c, a, cross(c, a, p));
}

/// 1 where any fully valid triangle of `mesh` covers the pixel.
inline std::vector<std::uint8_t> coverage(const egogen::render::ProjectedMesh& mesh,
                                          std::size_t h, std::size_t w) {
  std::vector<std::uint8_t> out(h * w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Pt p{static_cast<double>(x), static_cast<double>(y)};
      for (const auto& f : *mesh.faces) {
        if (!mesh.valid[f[0]] || !mesh.valid[f[1]] || !mesh.valid[f[2]]) continue;
        const Pt a{mesh.points(f[0], 0), mesh.points(f[0], 1)};
        const Pt b{mesh.points(f[1], 0), mesh.points(f[1], 1)};
        const Pt c{mesh.points(f[2], 0), mesh.points(f[2], 1)};
        if (covers(a, b, c, p)) {
          out[y * w + x] = 1;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace oracle
