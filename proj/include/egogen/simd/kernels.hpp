// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a portable scalar reference
// implementation and, where the build and the CPU allow it, an AVX2/FMA
// variant. The active table is chosen once at first use; EGOGEN_SIMD=scalar
// in the environment forces the reference path.

namespace egogen::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// Inputs for one image row of Plücker rays. `ray_basis` is the row-major
/// 3x3 matrix R^T K^-1; the camera centre `origin` is -R^T t.
struct PluckerRowArgs {
  const double* ray_basis;  // 9 values
  const double* origin;     // 3 values
  double v;                 // row coordinate
  std::size_t width;
  // Six output channels (m1 m2 m3 d1 d2 d3), each `width` long.
  double* out[6];
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // out[i] = sum_k taps[k] * in[i + k], for i < n_in - n_taps + 1
  void (*correlate_valid)(const double* in, std::size_t n_in, const double* taps,
                          std::size_t n_taps, double* out);
  void (*plucker_row)(const PluckerRowArgs& args);
};

const KernelTable& scalar_kernels();

/// Table for `isa`, or nullptr when that variant is not compiled in or the
/// running CPU lacks the instructions.
const KernelTable* kernels_for(Isa isa);

/// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace egogen::simd
