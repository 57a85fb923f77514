// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Plain loops, strictly sequential accumulation.

#include <cmath>

#include "egogen/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace egogen::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void correlate_valid_scalar(const double* in, std::size_t n_in, const double* taps,
                            std::size_t n_taps, double* out) {
  if (n_in < n_taps) return;
  const std::size_t n_out = n_in - n_taps + 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) s += taps[k] * in[i + k];
    out[i] = s;
  }
}

void plucker_row_scalar(const PluckerRowArgs& a) {
  const double* M = a.ray_basis;
  const double* o = a.origin;
  for (std::size_t i = 0; i < a.width; ++i) {
    const double u = static_cast<double>(i);
    double r0 = M[0] * u + M[1] * a.v + M[2];
    double r1 = M[3] * u + M[4] * a.v + M[5];
    double r2 = M[6] * u + M[7] * a.v + M[8];
    const double inv = 1.0 / std::sqrt(r0 * r0 + r1 * r1 + r2 * r2);
    r0 *= inv;
    r1 *= inv;
    r2 *= inv;
    a.out[0][i] = r1 * o[2] - r2 * o[1];
    a.out[1][i] = r2 * o[0] - r0 * o[2];
    a.out[2][i] = r0 * o[1] - r1 * o[0];
    a.out[3][i] = r0;
    a.out[4][i] = r1;
    a.out[5][i] = r2;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::kScalar,     dot_scalar,          axpy_scalar, sum_sq_diff_scalar,
      correlate_valid_scalar, plucker_row_scalar,
  };
  return table;
}

}  // namespace egogen::simd
