// SPDX-License-Identifier: Apache-2.0
// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma
// and only entered after a runtime CPU check.
#include <immintrin.h>

#include "tabgen/simd/kernels.hpp"

namespace tabgen::simd {
namespace {

inline double hsum(__m256d v) noexcept {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// c[0..n) += a0*b0 + a1*b1 + a2*b2 + a3*b3
inline void fma4_row(std::size_t n, double a0, double a1, double a2, double a3, const double* b0,
                     const double* b1, const double* b2, const double* b3, double* c) noexcept {
  const __m256d va0 = _mm256_set1_pd(a0);
  const __m256d va1 = _mm256_set1_pd(a1);
  const __m256d va2 = _mm256_set1_pd(a2);
  const __m256d va3 = _mm256_set1_pd(a3);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d vc = _mm256_loadu_pd(c + j);
    vc = _mm256_fmadd_pd(va0, _mm256_loadu_pd(b0 + j), vc);
    vc = _mm256_fmadd_pd(va1, _mm256_loadu_pd(b1 + j), vc);
    vc = _mm256_fmadd_pd(va2, _mm256_loadu_pd(b2 + j), vc);
    vc = _mm256_fmadd_pd(va3, _mm256_loadu_pd(b3 + j), vc);
    _mm256_storeu_pd(c + j, vc);
  }
  for (; j < n; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
}

inline void fma1_row(std::size_t n, double a0, const double* b0, double* c) noexcept {
  const __m256d va0 = _mm256_set1_pd(a0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(c + j, _mm256_fmadd_pd(va0, _mm256_loadu_pd(b0 + j), _mm256_loadu_pd(c + j)));
  }
  for (; j < n; ++j) c[j] += a0 * b0[j];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      fma4_row(n, ai[p], ai[p + 1], ai[p + 2], ai[p + 3], b + p * n, b + (p + 1) * n,
               b + (p + 2) * n, b + (p + 3) * n, ci);
    }
    for (; p < k; ++p) fma1_row(n, ai[p], b + p * n, ci);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      fma4_row(n, a[p * m + i], a[(p + 1) * m + i], a[(p + 2) * m + i], a[(p + 3) * m + i],
               b + p * n, b + (p + 1) * n, b + (p + 2) * n, b + (p + 3) * n, ci);
    }
    for (; p < k; ++p) fma1_row(n, a[p * m + i], b + p * n, ci);
  }
}

double dot(std::size_t n, const double* x, const double* y) noexcept {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += ai[p] * b0[p];
        r1 += ai[p] * b1[p];
        r2 += ai[p] * b2[p];
        r3 += ai[p] * b3[p];
      }
      double* ci = c + i * n + j;
      ci[0] += r0;
      ci[1] += r1;
      ci[2] += r2;
      ci[3] += r3;
    }
    for (; j < n; ++j) c[i * n + j] += dot(k, ai, b + j * k);
  }
}

void axpy(std::size_t n, double alpha, const double* TABGEN_RESTRICT x,
          double* TABGEN_RESTRICT y) noexcept {
  fma1_row(n, alpha, x, y);
}

double sqdist(std::size_t n, const double* x, const double* y) noexcept {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
    s1 = _mm256_fmadd_pd(d1, d1, s1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

constexpr KernelTable kAvx2{"avx2", gemm_nn, gemm_nt, gemm_tn, axpy, dot, sqdist};

}  // namespace

const KernelTable* detail::avx2_table() noexcept { return &kAvx2; }

}  // namespace tabgen::simd
