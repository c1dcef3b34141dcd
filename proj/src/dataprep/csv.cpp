// SPDX-License-Identifier: Apache-2.0
#include "tabgen/dataprep/csv.hpp"

#include <algorithm>

#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"

namespace tabgen {

std::optional<std::size_t> CsvTable::find(const std::string& column) const {
  auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::index(const std::string& column) const {
  if (auto i = find(column)) return *i;
  throw SchemaError("data has no column '" + column + "'");
}

std::size_t CsvTable::add_column(const std::string& column) {
  if (find(column)) throw SchemaError("column '" + column + "' already present");
  header.push_back(column);
  for (auto& r : rows) r.emplace_back();
  return header.size() - 1;
}

namespace {

std::vector<std::string> split_line(const std::string& text, std::size_t& pos, bool& quoted_any) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  quoted_any = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (in_quotes) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          cur.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      quoted_any = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (in_quotes) throw IoError("unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& s) {
  if (!needs_quotes(s)) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::size_t pos = 0;
  bool quoted = false;
  if (text.empty()) throw IoError("empty CSV input");
  t.header = split_line(text, pos, quoted);
  std::size_t line = 1;
  while (pos < text.size()) {
    ++line;
    auto fields = split_line(text, pos, quoted);
    if (fields.size() == 1 && fields[0].empty() && !quoted) continue;  // blank line
    if (fields.size() != t.header.size())
      throw SchemaError("CSV line " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(t.header.size()));
    std::vector<CsvTable::Cell> row;
    row.reserve(fields.size());
    for (auto& f : fields) {
      if (f.empty()) row.emplace_back();
      else row.emplace_back(std::move(f));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, table.header[i]);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      if (row[i]) append_field(out, *row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

void write_csv(const CsvTable& table, const std::string& path) { write_file(path, format_csv(table)); }

}  // namespace tabgen
