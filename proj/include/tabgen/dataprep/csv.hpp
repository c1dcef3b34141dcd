// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tabgen {

/// Header plus string cells; an empty cell is a missing value.
struct CsvTable {
  using Cell = std::optional<std::string>;

  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::optional<std::size_t> find(const std::string& column) const;
  std::size_t index(const std::string& column) const;  // throws SchemaError
  std::size_t add_column(const std::string& column);   // fills with missing
};

/// Comma-separated, optional double-quote quoting (RFC 4180 style).
CsvTable parse_csv(const std::string& text);
std::string format_csv(const CsvTable& table);

CsvTable read_csv(const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

}  // namespace tabgen
