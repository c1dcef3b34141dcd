// SPDX-License-Identifier: Apache-2.0
#include "tabgen/dataprep/prepare.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"

namespace tabgen {
namespace {

std::set<std::string> derived_outputs(const Schema& s) {
  std::set<std::string> out{s.condition.name};
  if (s.derive) {
    if (s.derive->bmi) out.insert(s.derive->bmi->output);
    for (const auto& e : s.derive->events) out.insert(e.output);
  }
  return out;
}

void check_columns(const Schema& s, const CsvTable& raw) {
  const auto derived = derived_outputs(s);
  std::set<std::string> allowed(derived.begin(), derived.end());
  for (const auto& c : s.columns) {
    allowed.insert(c.name);
    if (!derived.contains(c.name) && !raw.find(c.name))
      throw SchemaError("input data lacks attribute column '" + c.name + "'");
  }
  for (const auto& n : s.ignored) allowed.insert(n);
  if (s.derive) {
    if (s.derive->bmi) {
      allowed.insert(s.derive->bmi->weight);
      allowed.insert(s.derive->bmi->height);
    }
    if (!s.derive->program_start.empty()) allowed.insert(s.derive->program_start);
    for (const auto& e : s.derive->events) allowed.insert(e.date);
  }
  for (const auto& h : raw.header)
    if (!allowed.contains(h)) throw SchemaError("input column '" + h + "' is not described by the schema");
  for (const auto& a : allowed)
    if (!derived.contains(a) && !raw.find(a))
      throw SchemaError("input data lacks column '" + a + "'");
}

std::vector<std::optional<double>> numeric_column(const CsvTable& t, const std::string& name,
                                                  std::span<const std::size_t> rows) {
  const auto col = t.index(name);
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto& cell = t.rows[r][col];
    if (!cell) {
      out.emplace_back();
      continue;
    }
    double v = 0.0;
    auto res = std::from_chars(cell->data(), cell->data() + cell->size(), v);
    if (res.ec != std::errc{} || res.ptr != cell->data() + cell->size())
      throw SchemaError("column '" + name + "': '" + *cell + "' is not a number");
    out.emplace_back(v);
  }
  return out;
}

}  // namespace

PreparedData prepare(const Schema& raw_schema, const CsvTable& raw, const PrepareOptions& options) {
  raw_schema.validate();
  check_columns(raw_schema, raw);
  DeriveResult derived = derive_features(raw, raw_schema);
  const CsvTable& t = derived.table;
  if (t.rows.empty()) throw DataError("no records left after selection");

  const auto cpos = t.index(raw_schema.condition.name);
  std::vector<std::uint8_t> cond;
  cond.reserve(t.rows.size());
  for (const auto& row : t.rows) cond.push_back(static_cast<std::uint8_t>(raw_schema.condition.encode(*row[cpos])));
  const SplitIndices parts = split_indices(cond, options.split);
  std::vector<std::size_t> all(t.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  // Finalize categories, fitting bins on the training split only.
  Schema schema = raw_schema;
  schema.derive.reset();
  schema.ignored.clear();
  for (auto& a : schema.columns) {
    if (a.is_binned()) {
      const auto train_vals = numeric_column(t, a.name, parts.train);
      if (a.edges.empty()) a.edges = quantile_edges(train_vals, a.bins);
      if (a.midpoints.empty()) a.midpoints = bin_midpoints(a.edges, train_vals);
      a.categories = bin_labels(a.edges);
    }
    a.categories.emplace_back(kMissingLabel);
    a.missing_index = static_cast<std::uint32_t>(a.categories.size() - 1);
  }
  schema.validate();

  auto full_schema = std::make_shared<const Schema>(schema);
  Dataset full(full_schema);
  {
    std::vector<std::vector<std::uint32_t>> cols;
    for (const auto& a : schema.columns) {
      if (a.is_binned()) {
        cols.push_back(discretize(numeric_column(t, a.name, all), a.edges));
        continue;
      }
      const auto pos = t.index(a.name);
      std::vector<std::uint32_t> c;
      c.reserve(t.rows.size());
      for (const auto& row : t.rows) {
        if (!row[pos]) {
          c.push_back(*a.missing_index);
          continue;
        }
        try {
          c.push_back(a.encode(*row[pos]));
        } catch (const EncodingError&) {
          throw SchemaError("column '" + a.name + "': value '" + *row[pos] + "' is not a declared category");
        }
      }
      cols.push_back(std::move(c));
    }
    std::vector<std::uint32_t> buf(cols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      for (std::size_t j = 0; j < cols.size(); ++j) buf[j] = cols[j][r];
      full.push_back(buf, static_cast<Condition>(cond[r]));
    }
  }

  Dataset train = full.subset(parts.train);
  std::set<std::string> protect;
  for (const auto& p : schema.ergometry) {
    protect.insert(p.start);
    protect.insert(p.end);
  }
  const PruneReport pr = find_correlated(train, options.prune_threshold, protect);
  auto pruned = std::make_shared<const Schema>(drop_columns(schema, pr.removed));

  PreparedData out;
  out.schema = pruned;
  out.train = project(train, pruned);
  out.validation = project(full.subset(parts.validation), pruned);
  out.test = project(full.subset(parts.test), pruned);
  out.report = pr.to_json();
  out.report["rejected_records"] = derived.rejected.size();
  out.report["excluded_columns"] = raw_schema.ignored;
  out.report["split"] = {{"train", out.train.rows()},
                         {"validation", out.validation.rows()},
                         {"test", out.test.rows()},
                         {"seed", options.split.seed}};
  return out;
}

void write_prepared(const PreparedData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  save_schema(*data.schema, (dir / "schema.json").string());
  write_csv(data.train.to_csv(), (dir / "train.csv").string());
  write_csv(data.validation.to_csv(), (dir / "val.csv").string());
  write_csv(data.test.to_csv(), (dir / "test.csv").string());
  write_file(dir / "prune_report.json", data.report.dump(2) + "\n");
}

PreparedData load_prepared(const std::filesystem::path& dir) {
  PreparedData out;
  auto schema = std::make_shared<const Schema>(load_schema((dir / "schema.json").string()));
  if (!schema->is_prepared()) throw SchemaError(dir.string() + "/schema.json is not a prepared schema");
  out.schema = schema;
  out.train = Dataset::from_csv(schema, read_csv((dir / "train.csv").string()));
  out.validation = Dataset::from_csv(schema, read_csv((dir / "val.csv").string()));
  out.test = Dataset::from_csv(schema, read_csv((dir / "test.csv").string()));
  if (std::filesystem::exists(dir / "prune_report.json"))
    out.report = nlohmann::json::parse(read_file(dir / "prune_report.json"));
  return out;
}

}  // namespace tabgen
