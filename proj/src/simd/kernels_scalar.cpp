// SPDX-License-Identifier: Apache-2.0
// Reference kernels. Plain loops in the obvious summation order.
#include <cstdlib>
#include <cstring>
#include <string_view>

#include "tabgen/simd/kernels.hpp"

namespace tabgen::simd {
namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
             const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* TABGEN_RESTRICT x,
          double* TABGEN_RESTRICT y) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sqdist(std::size_t n, const double* x, const double* y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

constexpr KernelTable kScalar{"scalar", gemm_nn, gemm_nt, gemm_tn, axpy, dot, sqdist};

const KernelTable& select() noexcept {
  const char* env = std::getenv("TABGEN_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return kScalar;
  if (const KernelTable* t = avx2_kernels()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable* avx2_kernels() noexcept {
#if defined(TABGEN_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() noexcept {
  static const KernelTable& active = select();
  return active;
}

}  // namespace tabgen::simd
