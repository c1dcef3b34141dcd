// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/csv.hpp"
#include "tabgen/dataprep/dataset.hpp"
#include "tabgen/dataprep/preprocess.hpp"
#include "tabgen/dataprep/schema.hpp"

namespace tabgen {

struct PrepareOptions {
  SplitSpec split;
  double prune_threshold = 0.9;
};

struct PreparedData {
  std::shared_ptr<const Schema> schema;
  Dataset train, validation, test;
  nlohmann::json report;  // prune_report.json contents
};

/// derive -> split -> fit bins on the training split -> encode -> prune
/// (on the training split) -> project every split onto the pruned schema.
/// Ergometry start/end columns are never pruned.
PreparedData prepare(const Schema& raw_schema, const CsvTable& raw, const PrepareOptions& options);

/// Writes schema.json, train.csv, val.csv, test.csv and prune_report.json.
void write_prepared(const PreparedData& data, const std::filesystem::path& dir);
PreparedData load_prepared(const std::filesystem::path& dir);

}  // namespace tabgen
