// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// The individual preparation steps: binning, derived attributes,
// correlation pruning, stratified splitting and mini-batching.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/csv.hpp"
#include "tabgen/dataprep/dataset.hpp"
#include "tabgen/dataprep/schema.hpp"

namespace tabgen {

// ---- binning ---------------------------------------------------------------

/// Half-open bins: v < e0 -> 0, e[i-1] <= v < e[i] -> i, v >= e.back() ->
/// edges.size(). Absent or NaN values map to edges.size() + 1 (missing).
std::vector<std::uint32_t> discretize(std::span<const std::optional<double>> values,
                                      std::span<const double> edges);

/// Up to bins-1 strictly increasing quantile edges of the present values.
std::vector<double> quantile_edges(std::span<const std::optional<double>> values, int bins);

/// Representative value per value bin: interior bins use the centre, the
/// two open-ended bins use the centre between the edge and the observed
/// extreme (or the edge itself if nothing was observed beyond it).
std::vector<double> bin_midpoints(std::span<const double> edges,
                                  std::span<const std::optional<double>> values);

// ---- derived attributes ----------------------------------------------------

/// Relative change (end - start) / start >= threshold. nullopt when either
/// value is absent or start is zero.
std::optional<bool> improvement_flag(std::optional<double> start, std::optional<double> end,
                                     double threshold);

/// Risk iff no determinate flag is true; nullopt if every flag is
/// indeterminate.
std::optional<Condition> condition_from_flags(std::span<const std::optional<bool>> flags);

/// Days since 1970-01-01 for an ISO-8601 calendar date (YYYY-MM-DD).
std::optional<long> parse_iso_date(const std::string& s);

struct DeriveResult {
  CsvTable table;
  std::vector<std::size_t> rejected;  // input row numbers without any usable ergometry pair
};

/// Adds BMI, event weeks since program start and the condition column.
/// If the condition column already exists it must agree with the rule.
DeriveResult derive_features(const CsvTable& raw, const Schema& raw_schema);

// ---- correlation pruning ---------------------------------------------------

/// Pearson correlation of two columns' category indices over records where
/// neither is missing. nullopt when fewer than two such records or a
/// column is constant over them.
std::optional<double> index_correlation(const Dataset& data, std::size_t a, std::size_t b);

struct PruneReport {
  struct Pair {
    std::string kept, removed;
    double r;
  };
  double threshold = 0.9;
  std::vector<std::string> removed;
  std::vector<Pair> pairs;
  std::vector<std::string> undefined;  // columns constant on the data

  nlohmann::json to_json() const;
};

/// Scans feature-column pairs in schema order and removes the later member
/// of every pair with |r| > threshold. Protected columns are never removed
/// nor used to remove others.
PruneReport find_correlated(const Dataset& data, double threshold = 0.9,
                            const std::set<std::string>& protected_columns = {});

/// Schema without the named columns.
Schema drop_columns(const Schema& schema, const std::vector<std::string>& names);
/// Re-expresses a dataset over a schema whose columns are a subset.
Dataset project(const Dataset& data, std::shared_ptr<const Schema> target);

std::pair<Dataset, PruneReport> prune_correlated(const Dataset& data, double threshold = 0.9,
                                                 const std::set<std::string>& protected_columns = {});

// ---- splitting -------------------------------------------------------------

struct SplitSpec {
  double test_fraction = 0.2;
  double validation_fraction = 0.2;
  bool stratify = true;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

/// Test takes ceil(test_fraction * n) records, validation takes
/// ceil(validation_fraction * rest); each split gets its proportional share
/// of each class (rounded), the rest goes to the larger class.
SplitIndices split_indices(std::span<const std::uint8_t> conditions, const SplitSpec& spec);

struct Splits {
  Dataset train, validation, test;
};

Splits split(const Dataset& data, const SplitSpec& spec);

// ---- batching --------------------------------------------------------------

/// Epoch-specific shuffle of [0, n) cut into blocks of batch_size. A final
/// block with fewer than two rows is merged into the previous one.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch);

}  // namespace tabgen
