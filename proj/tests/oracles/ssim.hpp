// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Direct 2-D windowed SSIM: every valid window position is weighted by the
// full outer-product Gaussian, no separable filtering.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double ssim_plane(const std::vector<double>& a, const std::vector<double>& b,
                         std::size_t h, std::size_t w, std::size_t n = 11, double sigma = 1.5,
                         double peak = 255.0) {
  std::vector<double> g(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
    g[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + n <= h; ++y) {
    for (std::size_t x = 0; x + n <= w; ++x) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double wt = g[i] * g[j];
          const double p = a[(y + i) * w + x + j], q = b[(y + i) * w + x + j];
          mx += wt * p;
          my += wt * q;
          xx += wt * p * p;
          yy += wt * q * q;
          xy += wt * p * q;
        }
      }
      const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace oracle
