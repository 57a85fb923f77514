// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2/FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here runs unless dispatch confirmed CPU support.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace egogen::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Four outputs per iteration: each tap is broadcast and multiplied against an
// unaligned window of the input.
void correlate_valid_avx2(const double* in, std::size_t n_in, const double* taps,
                          std::size_t n_taps, double* out) {
  if (n_in < n_taps) return;
  const std::size_t n_out = n_in - n_taps + 1;
  std::size_t i = 0;
  for (; i + 4 <= n_out; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n_taps; ++k) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(in + i + k), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n_out; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) s += taps[k] * in[i + k];
    out[i] = s;
  }
}

void plucker_row_avx2(const PluckerRowArgs& a) {
  const double* M = a.ray_basis;
  const double* o = a.origin;
  const __m256d ox = _mm256_set1_pd(o[0]);
  const __m256d oy = _mm256_set1_pd(o[1]);
  const __m256d oz = _mm256_set1_pd(o[2]);
  // Row-constant parts of M * [u, v, 1].
  const __m256d c0 = _mm256_set1_pd(M[1] * a.v + M[2]);
  const __m256d c1 = _mm256_set1_pd(M[4] * a.v + M[5]);
  const __m256d c2 = _mm256_set1_pd(M[7] * a.v + M[8]);
  const __m256d m0 = _mm256_set1_pd(M[0]);
  const __m256d m3 = _mm256_set1_pd(M[3]);
  const __m256d m6 = _mm256_set1_pd(M[6]);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d step = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

  std::size_t i = 0;
  for (; i + 4 <= a.width; i += 4) {
    const __m256d u = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), step);
    __m256d r0 = _mm256_fmadd_pd(m0, u, c0);
    __m256d r1 = _mm256_fmadd_pd(m3, u, c1);
    __m256d r2 = _mm256_fmadd_pd(m6, u, c2);
    __m256d n2 = _mm256_mul_pd(r0, r0);
    n2 = _mm256_fmadd_pd(r1, r1, n2);
    n2 = _mm256_fmadd_pd(r2, r2, n2);
    const __m256d inv = _mm256_div_pd(one, _mm256_sqrt_pd(n2));
    r0 = _mm256_mul_pd(r0, inv);
    r1 = _mm256_mul_pd(r1, inv);
    r2 = _mm256_mul_pd(r2, inv);
    _mm256_storeu_pd(a.out[0] + i, _mm256_fmsub_pd(r1, oz, _mm256_mul_pd(r2, oy)));
    _mm256_storeu_pd(a.out[1] + i, _mm256_fmsub_pd(r2, ox, _mm256_mul_pd(r0, oz)));
    _mm256_storeu_pd(a.out[2] + i, _mm256_fmsub_pd(r0, oy, _mm256_mul_pd(r1, ox)));
    _mm256_storeu_pd(a.out[3] + i, r0);
    _mm256_storeu_pd(a.out[4] + i, r1);
    _mm256_storeu_pd(a.out[5] + i, r2);
  }
  if (i < a.width) {
    PluckerRowArgs tail = a;
    tail.width = a.width - i;
    // The scalar path derives u from the loop index, so shift the basis
    // translation column by the consumed prefix instead.
    double shifted[9] = {M[0], M[1], M[2] + M[0] * static_cast<double>(i),
                         M[3], M[4], M[5] + M[3] * static_cast<double>(i),
                         M[6], M[7], M[8] + M[6] * static_cast<double>(i)};
    tail.ray_basis = shifted;
    for (int c = 0; c < 6; ++c) tail.out[c] = a.out[c] + i;
    scalar_kernels().plucker_row(tail);
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::kAvx2,          dot_avx2,        axpy_avx2, sum_sq_diff_avx2,
      correlate_valid_avx2, plucker_row_avx2,
  };
  return table;
}

}  // namespace egogen::simd
