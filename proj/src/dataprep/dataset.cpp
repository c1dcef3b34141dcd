// SPDX-License-Identifier: Apache-2.0
#include "tabgen/dataprep/dataset.hpp"

#include <algorithm>

#include "tabgen/common/error.hpp"

namespace tabgen {

Dataset::Dataset(std::shared_ptr<const Schema> schema)
    : schema_(std::move(schema)), cols_(schema_->columns.size()), cards_(schema_->cardinalities()) {}

void Dataset::push_back(std::span<const std::uint32_t> row, Condition c) {
  if (row.size() != cols_)
    throw EncodingError("record has " + std::to_string(row.size()) + " values, schema has " +
                        std::to_string(cols_) + " columns");
  for (std::size_t j = 0; j < cols_; ++j)
    if (row[j] >= cards_[j])
      throw EncodingError("attribute '" + schema_->columns[j].name + "': index " + std::to_string(row[j]) +
                          " >= cardinality " + std::to_string(cards_[j]));
  cells_.insert(cells_.end(), row.begin(), row.end());
  conditions_.push_back(static_cast<std::uint8_t>(c));
}

void Dataset::append(const Dataset& other) {
  if (other.cols_ != cols_) throw ContractError("append: column count mismatch");
  cells_.insert(cells_.end(), other.cells_.begin(), other.cells_.end());
  conditions_.insert(conditions_.end(), other.conditions_.begin(), other.conditions_.end());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(schema_);
  out.cells_.reserve(indices.size() * cols_);
  out.conditions_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows()) throw ContractError("subset: row index out of range");
    auto r = row(i);
    out.cells_.insert(out.cells_.end(), r.begin(), r.end());
    out.conditions_.push_back(conditions_[i]);
  }
  return out;
}

std::size_t Dataset::count(Condition c) const noexcept {
  return static_cast<std::size_t>(
      std::count(conditions_.begin(), conditions_.end(), static_cast<std::uint8_t>(c)));
}

std::vector<std::size_t> Dataset::indices_of(Condition c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows(); ++i)
    if (conditions_[i] == static_cast<std::uint8_t>(c)) out.push_back(i);
  return out;
}

CsvTable Dataset::to_csv() const {
  CsvTable t;
  for (const auto& c : schema_->columns) t.header.push_back(c.name);
  t.header.push_back(schema_->condition.name);
  t.rows.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    std::vector<CsvTable::Cell> cells;
    cells.reserve(cols_ + 1);
    for (std::size_t j = 0; j < cols_; ++j) {
      const auto& attr = schema_->columns[j];
      const auto idx = at(r, j);
      if (attr.missing_index && idx == *attr.missing_index) cells.emplace_back();
      else cells.emplace_back(attr.decode(idx));
    }
    cells.emplace_back(schema_->condition.decode(conditions_[r]));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Dataset Dataset::from_csv(std::shared_ptr<const Schema> schema, const CsvTable& table) {
  Dataset out(schema);
  std::vector<std::size_t> pos;
  for (const auto& c : schema->columns) pos.push_back(table.index(c.name));
  const std::size_t cond_pos = table.index(schema->condition.name);
  if (table.header.size() != pos.size() + 1) {
    for (const auto& h : table.header)
      if (!schema->find_column(h) && h != schema->condition.name)
        throw SchemaError("data column '" + h + "' is not in the schema");
  }
  std::vector<std::uint32_t> buf(pos.size());
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const auto& attr = schema->columns[j];
      const auto& cell = row[pos[j]];
      if (!cell) {
        if (!attr.missing_index) throw EncodingError("attribute '" + attr.name + "' has no missing category");
        buf[j] = *attr.missing_index;
      } else {
        buf[j] = attr.encode(*cell);
      }
    }
    const auto& cc = row[cond_pos];
    if (!cc) throw EncodingError("condition value missing");
    out.push_back(buf, static_cast<Condition>(schema->condition.encode(*cc)));
  }
  return out;
}

}  // namespace tabgen
