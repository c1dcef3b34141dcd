// SPDX-License-Identifier: Apache-2.0
#include "tabgen/dataprep/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

#include "tabgen/common/error.hpp"
#include "tabgen/common/rng.hpp"

namespace tabgen {

// ---- binning ---------------------------------------------------------------

std::vector<std::uint32_t> discretize(std::span<const std::optional<double>> values,
                                      std::span<const double> edges) {
  if (edges.empty()) throw ContractError("discretize: need at least one edge");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i - 1] < edges[i])) throw ContractError("discretize: edges must be strictly increasing");
  const auto missing = static_cast<std::uint32_t>(edges.size() + 1);
  std::vector<std::uint32_t> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if (!v || std::isnan(*v)) {
      out.push_back(missing);
      continue;
    }
    out.push_back(static_cast<std::uint32_t>(std::upper_bound(edges.begin(), edges.end(), *v) - edges.begin()));
  }
  return out;
}

namespace {
std::vector<double> present_sorted(std::span<const std::optional<double>> values) {
  std::vector<double> xs;
  for (const auto& v : values)
    if (v && !std::isnan(*v)) xs.push_back(*v);
  std::sort(xs.begin(), xs.end());
  return xs;
}
}  // namespace

std::vector<double> quantile_edges(std::span<const std::optional<double>> values, int bins) {
  if (bins < 2) throw ContractError("quantile_edges: bins must be >= 2");
  const auto xs = present_sorted(values);
  if (xs.empty()) return {0.0};
  std::vector<double> edges;
  const double n1 = static_cast<double>(xs.size() - 1);
  for (int q = 1; q < bins; ++q) {
    const double pos = n1 * q / bins;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double e = xs[lo] + (pos - lo) * (xs[hi] - xs[lo]);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::vector<double> bin_midpoints(std::span<const double> edges,
                                  std::span<const std::optional<double>> values) {
  const auto xs = present_sorted(values);
  std::vector<double> mids;
  mids.reserve(edges.size() + 1);
  const double lo = !xs.empty() && xs.front() < edges.front() ? xs.front() : edges.front();
  mids.push_back(0.5 * (lo + edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i) mids.push_back(0.5 * (edges[i - 1] + edges[i]));
  const double hi = !xs.empty() && xs.back() > edges.back() ? xs.back() : edges.back();
  mids.push_back(0.5 * (edges.back() + hi));
  return mids;
}

// ---- derived attributes ----------------------------------------------------

std::optional<bool> improvement_flag(std::optional<double> start, std::optional<double> end,
                                     double threshold) {
  if (!start || !end || std::isnan(*start) || std::isnan(*end) || *start == 0.0) return std::nullopt;
  return (*end - *start) / *start >= threshold;
}

std::optional<Condition> condition_from_flags(std::span<const std::optional<bool>> flags) {
  bool any_determinate = false;
  for (const auto& f : flags) {
    if (!f) continue;
    any_determinate = true;
    if (*f) return Condition::kNonRisk;
  }
  if (!any_determinate) return std::nullopt;
  return Condition::kRisk;
}

std::optional<long> parse_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto parse = [&](std::size_t off, std::size_t len, auto& out) {
    auto r = std::from_chars(s.data() + off, s.data() + off + len, out);
    return r.ec == std::errc{} && r.ptr == s.data() + off + len;
  };
  if (!parse(0, 4, y) || !parse(5, 2, m) || !parse(8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

namespace {

std::optional<double> parse_number(const CsvTable::Cell& cell, const std::string& column) {
  if (!cell) return std::nullopt;
  double v = 0.0;
  const std::string& s = *cell;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw SchemaError("column '" + column + "': '" + s + "' is not a number");
  if (std::isnan(v)) return std::nullopt;
  return v;
}

long floor_div(long a, long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

DeriveResult derive_features(const CsvTable& raw, const Schema& raw_schema) {
  DeriveResult res;
  CsvTable& t = res.table;
  t = raw;

  if (raw_schema.derive) {
    const DeriveSpec& d = *raw_schema.derive;
    if (d.bmi) {
      const auto w = t.index(d.bmi->weight);
      const auto h = t.index(d.bmi->height);
      const auto out = t.find(d.bmi->output) ? t.index(d.bmi->output) : t.add_column(d.bmi->output);
      for (auto& row : t.rows) {
        const auto wv = parse_number(row[w], d.bmi->weight);
        const auto hv = parse_number(row[h], d.bmi->height);
        if (wv && hv && *hv > 0.0) row[out] = format_number(*wv / (*hv * *hv));
        else row[out].reset();
      }
    }
    if (!d.events.empty()) {
      const auto s = t.index(d.program_start);
      for (const auto& ev : d.events) {
        const auto src = t.index(ev.date);
        const auto out = t.find(ev.output) ? t.index(ev.output) : t.add_column(ev.output);
        for (auto& row : t.rows) {
          std::optional<long> sd, ed;
          if (row[s]) {
            sd = parse_iso_date(*row[s]);
            if (!sd) throw SchemaError("column '" + d.program_start + "': '" + *row[s] + "' is not an ISO date");
          }
          if (row[src]) {
            ed = parse_iso_date(*row[src]);
            if (!ed) throw SchemaError("column '" + ev.date + "': '" + *row[src] + "' is not an ISO date");
          }
          if (sd && ed) row[out] = std::to_string(floor_div(*ed - *sd, 7));
          else row[out].reset();
        }
      }
    }
  }

  // Condition from the ergometry pairs.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& p : raw_schema.ergometry) pairs.emplace_back(t.index(p.start), t.index(p.end));
  const std::string& cname = raw_schema.condition.name;
  const bool had_condition = t.find(cname).has_value();
  const auto cpos = had_condition ? t.index(cname) : t.add_column(cname);

  CsvTable kept;
  kept.header = t.header;
  std::vector<std::optional<bool>> flags(pairs.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto& row = t.rows[r];
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = raw_schema.ergometry[k];
      flags[k] = improvement_flag(parse_number(row[pairs[k].first], p.start),
                                  parse_number(row[pairs[k].second], p.end), raw_schema.improvement_threshold);
    }
    const auto cond = condition_from_flags(flags);
    if (!cond) {
      res.rejected.push_back(r);
      continue;
    }
    const std::string& label = raw_schema.condition.categories.at(static_cast<std::size_t>(*cond));
    if (had_condition && row[cpos] && *row[cpos] != label)
      throw SchemaError("row " + std::to_string(r + 1) + ": column '" + cname + "' is '" + *row[cpos] +
                        "' but the improvement rule gives '" + label + "'");
    row[cpos] = label;
    kept.rows.push_back(std::move(row));
  }
  t = std::move(kept);
  return res;
}

// ---- correlation pruning ---------------------------------------------------

std::optional<double> index_correlation(const Dataset& data, std::size_t a, std::size_t b) {
  const auto& sa = data.schema().columns.at(a);
  const auto& sb = data.schema().columns.at(b);
  double n = 0, mx = 0, my = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto x = data.at(r, a), y = data.at(r, b);
    if ((sa.missing_index && x == *sa.missing_index) || (sb.missing_index && y == *sb.missing_index)) continue;
    n += 1;
    mx += x;
    my += y;
  }
  if (n < 2) return std::nullopt;
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto x = data.at(r, a), y = data.at(r, b);
    if ((sa.missing_index && x == *sa.missing_index) || (sb.missing_index && y == *sb.missing_index)) continue;
    const double dx = x - mx, dy = y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

nlohmann::json PruneReport::to_json() const {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["removed"] = removed;
  auto pj = nlohmann::json::array();
  for (const auto& p : pairs) pj.push_back({{"kept", p.kept}, {"removed", p.removed}, {"r", p.r}});
  j["pairs"] = pj;
  j["undefined"] = undefined;
  return j;
}

PruneReport find_correlated(const Dataset& data, double threshold,
                            const std::set<std::string>& protected_columns) {
  const Schema& s = data.schema();
  std::vector<std::size_t> cand;
  for (std::size_t i : s.feature_columns())
    if (!protected_columns.contains(s.columns[i].name)) cand.push_back(i);

  PruneReport rep;
  rep.threshold = threshold;
  std::vector<bool> removed(s.columns.size(), false);
  std::set<std::string> undefined;
  for (std::size_t x = 0; x < cand.size(); ++x) {
    if (removed[cand[x]]) continue;
    for (std::size_t y = x + 1; y < cand.size(); ++y) {
      if (removed[cand[y]]) continue;
      const auto r = index_correlation(data, cand[x], cand[y]);
      if (!r) continue;
      if (std::abs(*r) > threshold) {
        removed[cand[y]] = true;
        rep.pairs.push_back({s.columns[cand[x]].name, s.columns[cand[y]].name, *r});
      }
    }
  }
  for (std::size_t i : cand) {
    // Constant columns leave every correlation undefined; report them.
    bool varies = false;
    const auto& a = s.columns[i];
    std::optional<std::uint32_t> first;
    for (std::size_t r = 0; r < data.rows() && !varies; ++r) {
      const auto v = data.at(r, i);
      if (a.missing_index && v == *a.missing_index) continue;
      if (!first) first = v;
      else if (*first != v) varies = true;
    }
    if (!varies) undefined.insert(a.name);
  }
  for (std::size_t i = 0; i < s.columns.size(); ++i)
    if (removed[i]) rep.removed.push_back(s.columns[i].name);
  for (std::size_t i : cand)
    if (undefined.contains(s.columns[i].name)) rep.undefined.push_back(s.columns[i].name);
  return rep;
}

Schema drop_columns(const Schema& schema, const std::vector<std::string>& names) {
  Schema out = schema;
  std::erase_if(out.columns, [&](const AttributeSpec& a) {
    return std::find(names.begin(), names.end(), a.name) != names.end();
  });
  return out;
}

Dataset project(const Dataset& data, std::shared_ptr<const Schema> target) {
  std::vector<std::size_t> src;
  for (const auto& c : target->columns) src.push_back(data.schema().column_index(c.name));
  Dataset out(target);
  std::vector<std::uint32_t> buf(src.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < src.size(); ++j) buf[j] = data.at(r, src[j]);
    out.push_back(buf, data.condition(r));
  }
  return out;
}

std::pair<Dataset, PruneReport> prune_correlated(const Dataset& data, double threshold,
                                                 const std::set<std::string>& protected_columns) {
  PruneReport rep = find_correlated(data, threshold, protected_columns);
  auto schema = std::make_shared<const Schema>(drop_columns(data.schema(), rep.removed));
  return {project(data, schema), std::move(rep)};
}

// ---- splitting -------------------------------------------------------------

namespace {

std::size_t ceil_fraction(double f, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9));
}

// Takes `total` records from the two shuffled pools, proportionally.
std::vector<std::size_t> take(std::vector<std::size_t>& pool0, std::vector<std::size_t>& pool1,
                              std::size_t total) {
  const std::size_t n = pool0.size() + pool1.size();
  const bool zero_is_minor = pool0.size() <= pool1.size();
  auto& minor = zero_is_minor ? pool0 : pool1;
  auto& major = zero_is_minor ? pool1 : pool0;
  std::size_t m = static_cast<std::size_t>(
      std::llround(static_cast<double>(minor.size()) * static_cast<double>(total) / static_cast<double>(n)));
  m = std::min(m, minor.size());
  std::size_t rest = total - m;
  if (rest > major.size()) {
    m += rest - major.size();
    rest = major.size();
  }
  std::vector<std::size_t> out(minor.begin(), minor.begin() + static_cast<long>(m));
  out.insert(out.end(), major.begin(), major.begin() + static_cast<long>(rest));
  minor.erase(minor.begin(), minor.begin() + static_cast<long>(m));
  major.erase(major.begin(), major.begin() + static_cast<long>(rest));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SplitIndices split_indices(std::span<const std::uint8_t> conditions, const SplitSpec& spec) {
  auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_unit(spec.test_fraction) || !in_unit(spec.validation_fraction))
    throw ConfigError("split fractions must lie in (0, 1)");
  if (conditions.empty()) throw ContractError("split: empty dataset");

  std::vector<std::size_t> pool0, pool1;
  for (std::size_t i = 0; i < conditions.size(); ++i) (conditions[i] ? pool1 : pool0).push_back(i);
  if (spec.stratify && (pool0.size() < 5 || pool1.size() < 5))
    throw StratificationError("each class needs at least 5 records to stratify (have " +
                              std::to_string(pool0.size()) + " non-risk, " + std::to_string(pool1.size()) +
                              " risk)");

  Rng rng = make_rng(spec.seed, "split");
  SplitIndices out;
  const std::size_t n = conditions.size();
  const std::size_t n_test = ceil_fraction(spec.test_fraction, n);
  const std::size_t n_val = ceil_fraction(spec.validation_fraction, n - n_test);

  if (spec.stratify) {
    std::shuffle(pool0.begin(), pool0.end(), rng);
    std::shuffle(pool1.begin(), pool1.end(), rng);
    out.test = take(pool0, pool1, n_test);
    out.validation = take(pool0, pool1, n_val);
    out.train = pool0;
    out.train.insert(out.train.end(), pool1.begin(), pool1.end());
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    out.test.assign(all.begin(), all.begin() + static_cast<long>(n_test));
    out.validation.assign(all.begin() + static_cast<long>(n_test), all.begin() + static_cast<long>(n_test + n_val));
    out.train.assign(all.begin() + static_cast<long>(n_test + n_val), all.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.validation.begin(), out.validation.end());
  }
  std::sort(out.train.begin(), out.train.end());
  return out;
}

Splits split(const Dataset& data, const SplitSpec& spec) {
  const auto idx = split_indices(data.conditions(), spec);
  return {data.subset(idx.train), data.subset(idx.validation), data.subset(idx.test)};
}

// ---- batching --------------------------------------------------------------

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "batches", {epoch});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size)
    out.emplace_back(order.begin() + static_cast<long>(i),
                     order.begin() + static_cast<long>(std::min(n, i + batch_size)));
  if (out.size() >= 2 && out.back().size() < 2) {
    auto last = std::move(out.back());
    out.pop_back();
    out.back().insert(out.back().end(), last.begin(), last.end());
  }
  return out;
}

}  // namespace tabgen
