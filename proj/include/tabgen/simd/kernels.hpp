// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// Dense double-precision kernels behind the numerics and sampling modules.
//
// Every kernel exists as a portable scalar reference and as an AVX2+FMA
// variant. The active table is chosen once per process:
//   - TABGEN_SIMD=scalar forces the reference kernels;
//   - otherwise AVX2 is used when the CPU reports avx2 and fma.
//
// All matrices are dense row-major with no padding. The gemm kernels
// accumulate (C += ...) and never alias C with an input.
// Results agree between variants to rounding (FMA contraction and
// summation order differ), not bit-for-bit.

#include <cstddef>
#include <string_view>

#if defined(_MSC_VER)
#define TABGEN_RESTRICT __restrict
#else
#define TABGEN_RESTRICT __restrict__
#endif

namespace tabgen::simd {

struct KernelTable {
  std::string_view name;

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
                  const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept;
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
                  const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept;
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* TABGEN_RESTRICT a,
                  const double* TABGEN_RESTRICT b, double* TABGEN_RESTRICT c) noexcept;
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* TABGEN_RESTRICT x,
               double* TABGEN_RESTRICT y) noexcept;
  double (*dot)(std::size_t n, const double* x, const double* y) noexcept;
  // sum_i (x_i - y_i)^2
  double (*sqdist)(std::size_t n, const double* x, const double* y) noexcept;
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when not compiled in or unsupported by this CPU.
const KernelTable* avx2_kernels() noexcept;

/// Table selected for this process.
const KernelTable& kernels() noexcept;

namespace detail {
// Defined in kernels_avx2.cpp (compiled with -mavx2 -mfma) when available.
const KernelTable* avx2_table() noexcept;
}  // namespace detail

}  // namespace tabgen::simd
