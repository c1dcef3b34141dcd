// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// Synthetic rehabilitation-style corpus with a known latent health factor
// f ~ N(0, 1) per patient:
//   informative x_i = a_i f + N(0, 0.5^2)
//   ergometry start s_v = exp(0.3 f + ln(base_v) + N(0, 0.1^2)),
//   end e_v = s_v (1 + delta_v)
//   P(non-risk) = P(some delta_v >= 0.15) = sigmoid(1.2 f + 0.3)
// Non-risk records improve each variable with probability 0.8 (at least
// one). Improving variables get delta ~ U(0.55, 1.0), the others
// delta ~ U(-0.12, -0.01). Ergometry columns use shared geometric bins
// (ratio 1.5), so the 15% rule evaluated on bin midpoints agrees with the
// rule on raw values.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tabgen/dataprep/csv.hpp"
#include "tabgen/dataprep/schema.hpp"

namespace tabgen {

struct BenchConfig {
  std::size_t patients = 811;
  std::size_t informative = 8;
  std::size_t noise = 20;
  double missing_rate = 0.20;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

inline constexpr std::array<double, 8> kInformativeCoefficients{1.0, -0.8, 0.9, 0.7, -0.6, 0.5, 0.8, -0.9};
inline constexpr double kInformativeNoiseSd = 0.5;

struct ErgometryVariable {
  std::string_view name;
  double base;
};
inline constexpr std::array<ErgometryVariable, 4> kErgometryVariables{
    {{"vo2peak", 20.0}, {"watts", 100.0}, {"mets", 6.0}, {"duration", 8.0}}};
inline constexpr double kErgometryHealthWeight = 0.3;
inline constexpr double kErgometryNoiseSd = 0.1;
inline constexpr double kErgometryBinRatio = 1.5;
inline constexpr int kErgometryEdges = 12;
inline constexpr double kImproveLow = 0.55, kImproveHigh = 1.0;
inline constexpr double kStableLow = -0.12, kStableHigh = -0.01;
inline constexpr double kLabelSlope = 1.2, kLabelIntercept = 0.3;
/// Chance that each ergometry variable improves in a non-risk record (at
/// least one always does).
inline constexpr double kImproveShare = 0.8;

/// Geometric edges base * r^(k - 6), k = 0..11, and the geometric bin
/// centres base * r^(i - 6.5), i = 0..12.
std::vector<double> ergometry_edges(double base);
std::vector<double> ergometry_midpoints(double base);

struct Benchmark {
  CsvTable raw;
  Schema schema;  // raw schema for the prepare step
  std::vector<double> health;  // ground-truth f per row
};

Benchmark generate_benchmark(const BenchConfig& cfg);

/// ISO-8601 date for days since 1970-01-01.
std::string format_iso_date(long days);

}  // namespace tabgen
