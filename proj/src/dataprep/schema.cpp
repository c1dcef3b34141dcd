// SPDX-License-Identifier: Apache-2.0
#include "tabgen/dataprep/schema.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"

namespace tabgen {

using nlohmann::json;

std::string to_string(AttributeKind k) {
  switch (k) {
    case AttributeKind::kContinuousBinned: return "continuous-binned";
    case AttributeKind::kCategorical: return "categorical";
    case AttributeKind::kBinary: return "binary";
  }
  return "?";
}

std::string to_string(Role r) {
  switch (r) {
    case Role::kFeature: return "feature";
    case Role::kGenerationOnly: return "generation-only";
    case Role::kCondition: return "condition";
    case Role::kLabel: return "label";
  }
  return "?";
}

AttributeKind parse_kind(const std::string& s) {
  if (s == "continuous-binned") return AttributeKind::kContinuousBinned;
  if (s == "categorical") return AttributeKind::kCategorical;
  if (s == "binary") return AttributeKind::kBinary;
  throw SchemaError("unknown attribute kind '" + s + "'");
}

Role parse_role(const std::string& s) {
  if (s == "feature") return Role::kFeature;
  if (s == "generation-only") return Role::kGenerationOnly;
  if (s == "condition") return Role::kCondition;
  if (s == "label") return Role::kLabel;
  throw SchemaError("unknown attribute role '" + s + "'");
}

std::uint32_t AttributeSpec::encode(const std::string& label) const {
  auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) throw EncodingError("attribute '" + name + "': unknown category '" + label + "'");
  return static_cast<std::uint32_t>(it - categories.begin());
}

const std::string& AttributeSpec::decode(std::uint32_t index) const {
  if (index >= categories.size())
    throw EncodingError("attribute '" + name + "': index " + std::to_string(index) + " out of range");
  return categories[index];
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> bin_labels(const std::vector<double>& edges) {
  std::vector<std::string> out;
  if (edges.empty()) return out;
  out.push_back("<" + format_number(edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i)
    out.push_back("[" + format_number(edges[i - 1]) + "," + format_number(edges[i]) + ")");
  out.push_back(">=" + format_number(edges.back()));
  return out;
}

std::optional<std::size_t> Schema::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::column_index(const std::string& name) const {
  if (auto i = find_column(name)) return *i;
  throw SchemaError("no attribute named '" + name + "'");
}

std::vector<std::size_t> Schema::feature_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].role == Role::kFeature) out.push_back(i);
  return out;
}

std::vector<std::uint32_t> Schema::cardinalities() const {
  std::vector<std::uint32_t> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.cardinality());
  return out;
}

namespace {

void validate_attribute(const AttributeSpec& a, bool prepared) {
  if (a.name.empty()) throw SchemaError("attribute with empty name");
  for (std::size_t i = 1; i < a.edges.size(); ++i)
    if (!(a.edges[i - 1] < a.edges[i]))
      throw SchemaError("attribute '" + a.name + "': bin edges must be strictly increasing");
  if (!a.midpoints.empty() && a.midpoints.size() != a.edges.size() + 1)
    throw SchemaError("attribute '" + a.name + "': need one midpoint per value bin");
  if (a.is_binned() && !prepared && a.edges.empty() && a.bins < 2)
    throw SchemaError("attribute '" + a.name + "': quantile binning needs bins >= 2");
  if (prepared || !a.is_binned()) {
    if (a.categories.empty()) throw SchemaError("attribute '" + a.name + "': no categories");
    std::set<std::string> uniq(a.categories.begin(), a.categories.end());
    if (uniq.size() != a.categories.size())
      throw SchemaError("attribute '" + a.name + "': duplicate category labels");
  }
  if (prepared && a.is_binned() && a.edges.empty())
    throw SchemaError("attribute '" + a.name + "': binned attribute without edges");
  if (a.kind == AttributeKind::kBinary) {
    const std::size_t values = a.categories.size() - (a.has_missing() ? 1 : 0);
    if (values != 2) throw SchemaError("attribute '" + a.name + "': binary attribute needs two categories");
  }
  if (a.missing_index && *a.missing_index + 1 != a.categories.size())
    throw SchemaError("attribute '" + a.name + "': missing category must be the last index");
  if (prepared && a.role != Role::kCondition && a.cardinality() < 2)
    throw SchemaError("attribute '" + a.name + "': cardinality must be >= 2");
}

}  // namespace

void Schema::validate() const {
  const bool prepared = is_prepared();
  std::set<std::string> names;
  for (const auto& a : columns) {
    if (!names.insert(a.name).second) throw SchemaError("duplicate attribute name '" + a.name + "'");
    if (a.role != Role::kFeature && a.role != Role::kGenerationOnly)
      throw SchemaError("attribute '" + a.name + "' has role " + to_string(a.role) + " in column list");
    validate_attribute(a, prepared);
  }
  if (condition.role != Role::kCondition) throw SchemaError("schema has no condition attribute");
  if (!names.insert(condition.name).second) throw SchemaError("duplicate attribute name '" + condition.name + "'");
  if (condition.kind != AttributeKind::kBinary || condition.categories.size() != 2)
    throw SchemaError("condition attribute must be binary with exactly two categories");
  for (const auto& n : ignored)
    if (!names.insert(n).second) throw SchemaError("duplicate attribute name '" + n + "'");

  std::set<std::string> ergo_end;
  for (const auto& p : ergometry) {
    if (!find_column(p.start)) throw SchemaError("ergometry start '" + p.start + "' is not an attribute");
    if (!find_column(p.end)) throw SchemaError("ergometry end '" + p.end + "' is not an attribute");
    const auto& s = columns[*find_column(p.start)];
    const auto& e = columns[*find_column(p.end)];
    if (!s.is_binned() || !e.is_binned())
      throw SchemaError("ergometry variable '" + p.name + "' must be continuous-binned");
    ergo_end.insert(p.end);
  }
  std::set<std::string> gen_only;
  for (const auto& a : columns)
    if (a.role == Role::kGenerationOnly) gen_only.insert(a.name);
  if (gen_only != ergo_end)
    throw SchemaError("generation-only attributes must be exactly the ergometry end variables");
  if (!(improvement_threshold > 0.0)) throw SchemaError("improvement threshold must be positive");
}

namespace {

json attribute_to_json(const AttributeSpec& a) {
  json j;
  j["name"] = a.name;
  j["kind"] = to_string(a.kind);
  j["role"] = to_string(a.role);
  if (!a.categories.empty()) j["categories"] = a.categories;
  if (!a.edges.empty()) j["edges"] = a.edges;
  if (!a.midpoints.empty()) j["midpoints"] = a.midpoints;
  if (a.is_binned() && a.edges.empty()) j["bins"] = a.bins;
  if (a.missing_index) j["missing_index"] = *a.missing_index;
  return j;
}

AttributeSpec attribute_from_json(const json& j) {
  AttributeSpec a;
  try {
    a.name = j.at("name").get<std::string>();
    a.kind = parse_kind(j.at("kind").get<std::string>());
    a.role = parse_role(j.value("role", std::string("feature")));
    a.categories = j.value("categories", std::vector<std::string>{});
    a.edges = j.value("edges", std::vector<double>{});
    a.midpoints = j.value("midpoints", std::vector<double>{});
    a.bins = j.value("bins", 5);
    if (j.contains("missing_index")) a.missing_index = j.at("missing_index").get<std::uint32_t>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed attribute: ") + e.what());
  }
  return a;
}

}  // namespace

json Schema::to_json() const {
  json j;
  j["version"] = version;
  json attrs = json::array();
  for (const auto& a : columns) attrs.push_back(attribute_to_json(a));
  attrs.push_back(attribute_to_json(condition));
  for (const auto& n : ignored) attrs.push_back({{"name", n}, {"kind", "categorical"}, {"role", "label"}});
  j["attributes"] = attrs;
  json ergo = json::array();
  for (const auto& p : ergometry) ergo.push_back({{"name", p.name}, {"start", p.start}, {"end", p.end}});
  j["ergometry"] = ergo;
  j["improvement_threshold"] = improvement_threshold;
  if (derive) {
    json d;
    if (derive->bmi)
      d["bmi"] = {{"output", derive->bmi->output}, {"weight", derive->bmi->weight}, {"height", derive->bmi->height}};
    if (!derive->program_start.empty()) d["program_start"] = derive->program_start;
    json ev = json::array();
    for (const auto& e : derive->events) ev.push_back({{"date", e.date}, {"output", e.output}});
    d["events"] = ev;
    j["derive"] = d;
  }
  return j;
}

Schema Schema::from_json(const json& j) {
  Schema s;
  try {
    s.version = j.at("version").is_string() ? j.at("version").get<std::string>() : j.at("version").dump();
    bool have_condition = false;
    for (const auto& ja : j.at("attributes")) {
      const Role role = parse_role(ja.value("role", std::string("feature")));
      if (role == Role::kLabel) {
        s.ignored.push_back(ja.at("name").get<std::string>());
        continue;
      }
      AttributeSpec a = attribute_from_json(ja);
      if (role == Role::kCondition) {
        if (have_condition) throw SchemaError("more than one condition attribute");
        s.condition = std::move(a);
        have_condition = true;
      } else {
        s.columns.push_back(std::move(a));
      }
    }
    if (!have_condition) throw SchemaError("schema has no condition attribute");
    for (const auto& jp : j.value("ergometry", json::array()))
      s.ergometry.push_back({jp.at("name").get<std::string>(), jp.at("start").get<std::string>(),
                             jp.at("end").get<std::string>()});
    s.improvement_threshold = j.value("improvement_threshold", 0.15);
    if (j.contains("derive")) {
      const json& jd = j.at("derive");
      DeriveSpec d;
      if (jd.contains("bmi"))
        d.bmi = DeriveSpec::Bmi{jd["bmi"].at("output").get<std::string>(), jd["bmi"].at("weight").get<std::string>(),
                                jd["bmi"].at("height").get<std::string>()};
      d.program_start = jd.value("program_start", std::string{});
      for (const auto& je : jd.value("events", json::array()))
        d.events.push_back({je.at("date").get<std::string>(), je.at("output").get<std::string>()});
      if (!d.events.empty() && d.program_start.empty())
        throw SchemaError("event dates need a program_start column");
      s.derive = std::move(d);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

bool Schema::is_prepared() const {
  return std::all_of(columns.begin(), columns.end(), [](const AttributeSpec& a) {
    return !a.categories.empty() && (!a.is_binned() || !a.edges.empty());
  });
}

std::string Schema::content_hash() const { return sha256_hex(to_json().dump()); }

Schema load_schema(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("schema " + path + " is not valid JSON: " + e.what());
  }
  Schema s = Schema::from_json(j);
  if (j.contains("hash") && j["hash"].get<std::string>() != s.content_hash())
    throw SchemaError("schema " + path + ": content hash does not match its attributes");
  return s;
}

void save_schema(const Schema& schema, const std::string& path) {
  json j = schema.to_json();
  if (!schema.derive) j["hash"] = schema.content_hash();
  write_file(path, j.dump(2) + "\n");
}

}  // namespace tabgen
