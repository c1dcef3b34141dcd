// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tabgen {

enum class AttributeKind { kContinuousBinned, kCategorical, kBinary };
enum class Role { kFeature, kGenerationOnly, kCondition, kLabel };

std::string to_string(AttributeKind k);
std::string to_string(Role r);
AttributeKind parse_kind(const std::string& s);
Role parse_role(const std::string& s);

inline constexpr const char* kMissingLabel = "NA";

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::kCategorical;
  Role role = Role::kFeature;
  /// Ordered labels; when has_missing() the last one is the missing category.
  std::vector<std::string> categories;
  /// Binned kinds: strictly increasing edges, and one representative
  /// value per value bin (edges.size() + 1 of them).
  std::vector<double> edges;
  std::vector<double> midpoints;
  /// Quantile bin count used when a raw schema gives no explicit edges.
  int bins = 5;
  std::optional<std::uint32_t> missing_index;

  std::uint32_t cardinality() const noexcept { return static_cast<std::uint32_t>(categories.size()); }
  bool has_missing() const noexcept { return missing_index.has_value(); }
  bool is_binned() const noexcept { return kind == AttributeKind::kContinuousBinned; }
  /// Category index for a label; throws EncodingError for unknown labels.
  std::uint32_t encode(const std::string& label) const;
  const std::string& decode(std::uint32_t index) const;
};

/// Start/end pair of an exercise-test variable whose relative change
/// defines the condition.
struct ErgometryPair {
  std::string name;
  std::string start;
  std::string end;
};

/// Raw-schema instructions for derived attributes.
struct DeriveSpec {
  struct Bmi {
    std::string output, weight, height;
  };
  struct Event {
    std::string date, output;
  };
  std::optional<Bmi> bmi;
  std::string program_start;  // ISO-8601 date column; empty when no events
  std::vector<Event> events;
};

struct Schema {
  std::string version = "1";
  /// Modelled attributes (roles feature and generation-only), in order.
  std::vector<AttributeSpec> columns;
  /// The single binary condition attribute (categories non-risk, risk).
  AttributeSpec condition;
  std::vector<ErgometryPair> ergometry;
  double improvement_threshold = 0.15;
  std::optional<DeriveSpec> derive;
  /// Columns with role label: carried in raw data, never modelled.
  std::vector<std::string> ignored;

  std::size_t column_index(const std::string& name) const;  // throws SchemaError
  std::optional<std::size_t> find_column(const std::string& name) const;
  std::vector<std::size_t> feature_columns() const;
  std::vector<std::uint32_t> cardinalities() const;

  /// True when every column carries final categories (and edges if binned).
  bool is_prepared() const;
  /// Checks every structural invariant; throws SchemaError.
  void validate() const;
  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);
  /// SHA-256 over the canonical JSON form.
  std::string content_hash() const;
};

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);
/// Labels for value bins: "<e0", "[e0,e1)", ..., ">=en".
std::vector<std::string> bin_labels(const std::vector<double>& edges);

}  // namespace tabgen
