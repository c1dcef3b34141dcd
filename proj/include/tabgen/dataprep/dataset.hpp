// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tabgen/dataprep/csv.hpp"
#include "tabgen/dataprep/schema.hpp"

namespace tabgen {

enum class Condition : std::uint8_t { kNonRisk = 0, kRisk = 1 };

/// Encoded records: one category index per schema column, plus the
/// condition label of each record.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::shared_ptr<const Schema> schema);

  const Schema& schema() const { return *schema_; }
  std::shared_ptr<const Schema> schema_ptr() const { return schema_; }
  std::size_t rows() const noexcept { return conditions_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return conditions_.empty(); }

  std::span<const std::uint32_t> row(std::size_t r) const { return {cells_.data() + r * cols_, cols_}; }
  std::uint32_t at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  Condition condition(std::size_t r) const { return static_cast<Condition>(conditions_[r]); }
  const std::vector<std::uint8_t>& conditions() const noexcept { return conditions_; }
  const std::vector<std::uint32_t>& cells() const noexcept { return cells_; }

  /// Appends a record; throws EncodingError when an index is out of range.
  void push_back(std::span<const std::uint32_t> row, Condition c);
  void append(const Dataset& other);

  Dataset subset(std::span<const std::size_t> indices) const;
  std::size_t count(Condition c) const noexcept;
  std::vector<std::size_t> indices_of(Condition c) const;

  /// Category labels with the missing category written as an empty cell.
  CsvTable to_csv() const;
  static Dataset from_csv(std::shared_ptr<const Schema> schema, const CsvTable& table);

 private:
  std::shared_ptr<const Schema> schema_;
  std::size_t cols_ = 0;
  std::vector<std::uint32_t> cards_;
  std::vector<std::uint32_t> cells_;
  std::vector<std::uint8_t> conditions_;
};

}  // namespace tabgen
