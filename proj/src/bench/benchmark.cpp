// SPDX-License-Identifier: Apache-2.0
#include "tabgen/bench/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/common/rng.hpp"

namespace tabgen {

void BenchConfig::validate() const {
  if (patients < 50) throw ConfigError("patients must be >= 50");
  if (!(missing_rate >= 0.0 && missing_rate < 0.9)) throw ConfigError("missing rate must be in [0, 0.9)");
  if (informative < 1 || informative > kInformativeCoefficients.size())
    throw ConfigError("informative features must be in [1, 8]");
}

std::vector<double> ergometry_edges(double base) {
  std::vector<double> e;
  for (int k = 0; k < kErgometryEdges; ++k) e.push_back(base * std::pow(kErgometryBinRatio, k - kErgometryEdges / 2));
  return e;
}

std::vector<double> ergometry_midpoints(double base) {
  std::vector<double> m;
  for (int i = 0; i <= kErgometryEdges; ++i)
    m.push_back(base * std::pow(kErgometryBinRatio, i - kErgometryEdges / 2 - 0.5));
  return m;
}

std::string format_iso_date(long days) {
  // Civil-from-days over the proleptic Gregorian calendar.
  days += 719468;
  const long era = (days >= 0 ? days : days - 146096) / 146097;
  const long doe = days - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const long d = doy - (153 * mp + 2) / 5 + 1;
  const long m = mp < 10 ? mp + 3 : mp - 9;
  const long y = yoe + era * 400 + (m <= 2 ? 1 : 0);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04ld-%02ld-%02ld", y, m, d);
  return buf;
}

namespace {

AttributeSpec binned(std::string name, Role role = Role::kFeature) {
  AttributeSpec a;
  a.name = std::move(name);
  a.kind = AttributeKind::kContinuousBinned;
  a.role = role;
  return a;
}

std::string fixed(double v, int decimals) {
  const double s = std::pow(10.0, decimals);
  return format_number(std::round(v * s) / s);
}

}  // namespace

Benchmark generate_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  Benchmark b;
  Schema& s = b.schema;

  AttributeSpec sex;
  sex.name = "sex";
  sex.kind = AttributeKind::kBinary;
  sex.categories = {"F", "M"};
  s.columns = {sex, binned("age"), binned("weight_kg"), binned("height_m"), binned("bmi"),
               binned("event_weeks"), binned("admission_weeks")};
  for (std::size_t i = 0; i < cfg.informative; ++i) s.columns.push_back(binned("x" + std::to_string(i + 1)));
  std::vector<std::uint32_t> noise_card;
  for (std::size_t i = 0; i < cfg.noise; ++i) {
    AttributeSpec a;
    a.name = "noise" + std::to_string(i + 1);
    noise_card.push_back(3 + static_cast<std::uint32_t>(i % 4));
    for (std::uint32_t c = 0; c < noise_card.back(); ++c) a.categories.push_back("c" + std::to_string(c));
    s.columns.push_back(a);
  }
  for (const auto& v : kErgometryVariables) {
    const std::string n(v.name);
    AttributeSpec st = binned(n + "_start"), en = binned(n + "_end", Role::kGenerationOnly);
    st.edges = en.edges = ergometry_edges(v.base);
    st.midpoints = en.midpoints = ergometry_midpoints(v.base);
    s.columns.push_back(st);
    s.columns.push_back(en);
    s.ergometry.push_back({n, n + "_start", n + "_end"});
  }
  s.condition.name = "risk";
  s.condition.kind = AttributeKind::kBinary;
  s.condition.role = Role::kCondition;
  s.condition.categories = {"non-risk", "risk"};
  DeriveSpec d;
  d.bmi = DeriveSpec::Bmi{"bmi", "weight_kg", "height_m"};
  d.program_start = "program_start_date";
  d.events = {{"event_date", "event_weeks"}, {"admission_date", "admission_weeks"}};
  s.derive = d;
  s.validate();

  // Raw column order.
  CsvTable& t = b.raw;
  t.header = {"patient_id", "sex", "age", "weight_kg", "height_m", "program_start_date", "event_date", "admission_date"};
  s.ignored = {"patient_id"};
  for (std::size_t i = 0; i < cfg.informative; ++i) t.header.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < cfg.noise; ++i) t.header.push_back("noise" + std::to_string(i + 1));
  for (const auto& v : kErgometryVariables) {
    t.header.push_back(std::string(v.name) + "_start");
    t.header.push_back(std::string(v.name) + "_end");
  }
  t.header.push_back("risk");

  Rng rng = make_rng(cfg.seed, "benchmark");
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution miss(cfg.missing_rate);
  auto maybe = [&](std::string v) -> CsvTable::Cell {
    if (miss(rng)) return std::nullopt;
    return v;
  };

  const long day0 = 16436;  // 2015-01-01
  for (std::size_t p = 0; p < cfg.patients; ++p) {
    const double f = nd(rng);
    b.health.push_back(f);
    std::vector<CsvTable::Cell> row;
    row.emplace_back("P" + std::to_string(p + 1));
    row.push_back(maybe(unif(rng) < 0.3 ? "F" : "M"));
    row.push_back(maybe(fixed(62.0 + 10.0 * nd(rng), 0)));
    row.push_back(maybe(fixed(80.0 + 12.0 * nd(rng), 1)));
    row.push_back(maybe(fixed(1.70 + 0.09 * nd(rng), 2)));
    const long start = day0 + static_cast<long>(unif(rng) * 2000.0);
    row.emplace_back(format_iso_date(start));
    row.push_back(maybe(format_iso_date(start - 7 - static_cast<long>(unif(rng) * 180.0))));
    row.push_back(maybe(format_iso_date(start - static_cast<long>(unif(rng) * 60.0))));
    for (std::size_t i = 0; i < cfg.informative; ++i)
      row.push_back(maybe(fixed(kInformativeCoefficients[i] * f + kInformativeNoiseSd * nd(rng), 3)));
    for (std::size_t i = 0; i < cfg.noise; ++i)
      row.push_back(maybe("c" + std::to_string(static_cast<std::uint32_t>(unif(rng) * noise_card[i]))));

    // Label first, then which variables improve.
    const double p_non_risk = 1.0 / (1.0 + std::exp(-(kLabelSlope * f + kLabelIntercept)));
    const bool non_risk = unif(rng) < p_non_risk;
    std::array<bool, 4> improves{};
    if (non_risk) {
      for (auto& x : improves) x = unif(rng) < kImproveShare;
      improves[static_cast<std::size_t>(unif(rng) * 4.0) % 4] = true;
    }
    std::array<std::string, 4> start_v, end_v;
    for (std::size_t v = 0; v < 4; ++v) {
      const double sv = std::exp(kErgometryHealthWeight * f + std::log(kErgometryVariables[v].base) +
                                 kErgometryNoiseSd * nd(rng));
      const double delta = improves[v] ? kImproveLow + (kImproveHigh - kImproveLow) * unif(rng)
                                       : kStableLow + (kStableHigh - kStableLow) * unif(rng);
      start_v[v] = fixed(sv, 3);
      end_v[v] = fixed(sv * (1.0 + delta), 3);
    }
    // Mask values, then restore a pair that still determines the label.
    std::array<bool, 8> present{};
    for (auto& x : present) x = !miss(rng);
    auto pair_ok = [&](std::size_t v) { return present[2 * v] && present[2 * v + 1]; };
    bool determined = false;
    for (std::size_t v = 0; v < 4; ++v)
      if (pair_ok(v) && (non_risk ? improves[v] : true)) determined = true;
    if (!determined) {
      std::vector<std::size_t> candidates;
      for (std::size_t v = 0; v < 4; ++v)
        if (!non_risk || improves[v]) candidates.push_back(v);
      const std::size_t v = candidates[static_cast<std::size_t>(unif(rng) * candidates.size()) % candidates.size()];
      present[2 * v] = present[2 * v + 1] = true;
    }
    for (std::size_t v = 0; v < 4; ++v) {
      row.push_back(present[2 * v] ? CsvTable::Cell{start_v[v]} : std::nullopt);
      row.push_back(present[2 * v + 1] ? CsvTable::Cell{end_v[v]} : std::nullopt);
    }
    row.emplace_back(non_risk ? "non-risk" : "risk");
    t.rows.push_back(std::move(row));
  }
  return b;
}

}  // namespace tabgen
