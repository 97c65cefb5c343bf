#pragma once
// Knowledge-graph data model: label schemas, graph elements, structural
// validation, and JSON (de)serialization.
//
// A graph is a directed multi-graph over labeled token spans:
//   - entities: typed inclusive [start, end] spans; the same exact span
//     cannot carry two entity types, but spans may overlap or nest
//   - attributes: boolean labels on entities (multi-label)
//   - relations: typed directed edges between distinct entities
// Attributes and relations reference entities by index into the graph's
// entity list, which is also how the JSON format stores them.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear {

// Inclusive token span at the word level.
struct TokenSpan {
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  auto operator<=>(const TokenSpan&) const = default;
};

struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string type;
  TokenSpan span() const { return {start, end}; }
  auto operator<=>(const EntitySpan&) const = default;
};

struct AttributeLabel {
  std::size_t entity = 0;  // index into KnowledgeGraph::entities
  std::string type;
  auto operator<=>(const AttributeLabel&) const = default;
};

struct RelationEdge {
  std::size_t head = 0;  // index into KnowledgeGraph::entities
  std::size_t tail = 0;
  std::string type;
  auto operator<=>(const RelationEdge&) const = default;
};

// The legal label vocabulary. Label vectors are ordered; classifier class
// indices follow that order. `open` schemas tolerate labels outside the
// listed vocabulary in loaded data (used for schemas known to be
// incomplete).
struct SchemaDef {
  std::string name;
  std::vector<std::string> entity_types;
  std::vector<std::string> attribute_types;
  std::vector<std::string> relation_types;
  // attribute label -> entity types it may attach to; advisory, violations
  // are reported as warnings.
  std::map<std::string, std::set<std::string>> attribute_scope;
  bool open = false;

  static int index_of(const std::vector<std::string>& labels, const std::string& label) {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
  }
  int entity_index(const std::string& label) const { return index_of(entity_types, label); }
  int attribute_index(const std::string& label) const { return index_of(attribute_types, label); }
  int relation_index(const std::string& label) const { return index_of(relation_types, label); }
};

struct KnowledgeGraph {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entities;
  std::vector<AttributeLabel> attributes;
  std::vector<RelationEdge> relations;
};

// ---------------------------------------------------------------------------
// Builtin schemas

inline SchemaDef builtin_schema(const std::string& name) {
  if (name == "scientific-claims") {
    SchemaDef s;
    s.name = "scientific-claims";
    s.entity_types = {"factor", "association", "magnitude", "evidence", "epistemic", "qualifier"};
    s.attribute_types = {"causation", "comparison", "indicates", "increases",
                         "decreases", "correlation", "test"};
    s.relation_types = {"arg0", "arg1", "comp_to", "modifier", "q+", "q-", "subtype"};
    for (const auto& a : s.attribute_types) s.attribute_scope[a] = {"association"};
    return s;
  }
  if (name == "ethnographic") {
    // Known to be incomplete, hence `open`: real data may carry labels
    // beyond the ones listed here.
    SchemaDef s;
    s.name = "ethnographic";
    s.entity_types = {"factor", "association", "magnitude", "qualifier"};
    s.attribute_types = {"spirituality", "action/event", "influence"};
    s.relation_types = {"agent/poss", "t+", "forPurpose", "hasFunction",
                        "arg0", "arg1", "modifier", "q+", "q-"};
    s.open = true;
    return s;
  }
  throw NotFoundError("unknown builtin schema: " + name);
}

// Violations of SchemaDef's own invariants (empty or overlapping label
// sets, scope entries outside the vocabulary). Empty result means valid.
inline std::vector<std::string> schema_problems(const SchemaDef& s) {
  std::vector<std::string> out;
  auto check_set = [&](const std::vector<std::string>& labels, const char* what) {
    if (labels.empty()) out.push_back(std::string(what) + " label set is empty");
    std::set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l).second) out.push_back(std::string("duplicate ") + what + " label: " + l);
  };
  check_set(s.entity_types, "entity");
  check_set(s.attribute_types, "attribute");
  check_set(s.relation_types, "relation");
  auto overlap = [&](const std::vector<std::string>& a, const std::vector<std::string>& b,
                     const char* msg) {
    for (const auto& l : a)
      if (SchemaDef::index_of(b, l) >= 0) out.push_back(std::string(msg) + ": " + l);
  };
  overlap(s.entity_types, s.attribute_types, "label in both entity and attribute sets");
  overlap(s.entity_types, s.relation_types, "label in both entity and relation sets");
  overlap(s.attribute_types, s.relation_types, "label in both attribute and relation sets");
  for (const auto& [attr, scope] : s.attribute_scope) {
    if (s.attribute_index(attr) < 0)
      out.push_back("attribute_scope key is not an attribute type: " + attr);
    for (const auto& et : scope)
      if (s.entity_index(et) < 0)
        out.push_back("attribute_scope value is not an entity type: " + et);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural validation

enum class Severity { error, warning };

struct Violation {
  std::string rule;  // stable identifier, e.g. "self-cycle"
  Severity severity = Severity::error;
  std::string message;
  auto operator<=>(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return v.severity == Severity::error; });
  }
  std::size_t error_count() const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [](const Violation& v) { return v.severity == Severity::error; }));
  }
  std::size_t warning_count() const { return violations.size() - error_count(); }
};

namespace detail {

inline std::string span_text(const KnowledgeGraph& g, int start, int end) {
  std::string out;
  for (int i = start; i <= end && i >= 0 && i < static_cast<int>(g.tokens.size()); ++i) {
    if (!out.empty()) out += ' ';
    out += g.tokens[i];
  }
  return out;
}

inline void validate_structure(const KnowledgeGraph& g, ValidationReport& report) {
  const int n = static_cast<int>(g.tokens.size());
  std::map<std::pair<int, int>, std::size_t> span_seen;
  for (std::size_t i = 0; i < g.entities.size(); ++i) {
    const auto& e = g.entities[i];
    if (e.start < 0 || e.start > e.end || e.end >= n) {
      report.violations.push_back({"span-range", Severity::error,
                                   "entity " + std::to_string(i) + " span [" +
                                       std::to_string(e.start) + ", " + std::to_string(e.end) +
                                       "] out of range for " + std::to_string(n) + " tokens"});
    }
    auto [it, inserted] = span_seen.emplace(std::make_pair(e.start, e.end), i);
    if (!inserted) {
      report.violations.push_back({"duplicate-span", Severity::error,
                                   "entities " + std::to_string(it->second) + " and " +
                                       std::to_string(i) + " share the exact span [" +
                                       std::to_string(e.start) + ", " + std::to_string(e.end) +
                                       "]"});
    }
  }
  std::set<std::pair<std::size_t, std::string>> attr_seen;
  for (std::size_t i = 0; i < g.attributes.size(); ++i) {
    const auto& a = g.attributes[i];
    if (a.entity >= g.entities.size()) {
      report.violations.push_back({"attribute-ref", Severity::error,
                                   "attribute " + std::to_string(i) + " (" + a.type +
                                       ") references missing entity index " +
                                       std::to_string(a.entity)});
      continue;
    }
    if (!attr_seen.emplace(a.entity, a.type).second) {
      report.violations.push_back({"duplicate-attribute", Severity::error,
                                   "attribute " + a.type + " repeated on entity " +
                                       std::to_string(a.entity)});
    }
  }
  std::set<std::tuple<std::size_t, std::size_t, std::string>> rel_seen;
  for (std::size_t i = 0; i < g.relations.size(); ++i) {
    const auto& r = g.relations[i];
    bool dangling = false;
    if (r.head >= g.entities.size()) {
      report.violations.push_back({"relation-ref", Severity::error,
                                   "relation " + std::to_string(i) + " (" + r.type +
                                       ") references missing head entity index " +
                                       std::to_string(r.head)});
      dangling = true;
    }
    if (r.tail >= g.entities.size()) {
      report.violations.push_back({"relation-ref", Severity::error,
                                   "relation " + std::to_string(i) + " (" + r.type +
                                       ") references missing tail entity index " +
                                       std::to_string(r.tail)});
      dangling = true;
    }
    if (dangling) continue;
    if (r.head == r.tail) {
      report.violations.push_back({"self-cycle", Severity::error,
                                   "relation " + r.type + " loops entity " +
                                       std::to_string(r.head) + " (" +
                                       span_text(g, g.entities[r.head].start,
                                                 g.entities[r.head].end) +
                                       ") onto itself"});
    }
    if (!rel_seen.emplace(r.head, r.tail, r.type).second) {
      report.violations.push_back({"duplicate-relation", Severity::error,
                                   "relation " + r.type + " repeated between entities " +
                                       std::to_string(r.head) + " and " +
                                       std::to_string(r.tail)});
    }
  }
}

inline void validate_vocabulary(const KnowledgeGraph& g, const SchemaDef& schema,
                                ValidationReport& report) {
  for (std::size_t i = 0; i < g.entities.size(); ++i) {
    if (schema.entity_index(g.entities[i].type) < 0 && !schema.open) {
      report.violations.push_back({"entity-type", Severity::error,
                                   "entity " + std::to_string(i) + " has unknown type " +
                                       g.entities[i].type});
    }
  }
  for (const auto& a : g.attributes) {
    if (a.entity >= g.entities.size()) continue;  // reported by structure pass
    if (schema.attribute_index(a.type) < 0 && !schema.open) {
      report.violations.push_back(
          {"attribute-type", Severity::error, "unknown attribute type " + a.type});
    }
    auto scope = schema.attribute_scope.find(a.type);
    if (scope != schema.attribute_scope.end() &&
        !scope->second.contains(g.entities[a.entity].type)) {
      report.violations.push_back({"attribute-scope", Severity::warning,
                                   "attribute " + a.type + " attached to a " +
                                       g.entities[a.entity].type +
                                       " entity, outside its declared scope"});
    }
  }
  for (const auto& r : g.relations) {
    if (schema.relation_index(r.type) < 0 && !schema.open) {
      report.violations.push_back(
          {"relation-type", Severity::error, "unknown relation type " + r.type});
    }
  }
}

}  // namespace detail

// Structural checks only (no schema vocabulary): span ranges, duplicate
// spans, dangling references, duplicate attributes/relations, self-cycles.
inline ValidationReport validate_graph(const KnowledgeGraph& g) {
  ValidationReport report;
  detail::validate_structure(g, report);
  return report;
}

// Full validation: structure plus label vocabulary and attribute scope.
// Scope violations are warnings; under an `open` schema unknown labels are
// permitted and produce no violation.
inline ValidationReport validate_graph(const KnowledgeGraph& g, const SchemaDef& schema) {
  ValidationReport report;
  detail::validate_structure(g, report);
  detail::validate_vocabulary(g, schema, report);
  return report;
}

// ---------------------------------------------------------------------------
// Canonical form and equality

// Same graph with entities sorted by (start, end, type), attributes and
// relations re-indexed accordingly and sorted. Serialization writes this
// form so equal graphs have equal bytes.
inline KnowledgeGraph canonicalized(const KnowledgeGraph& g) {
  KnowledgeGraph out;
  out.tokens = g.tokens;
  std::vector<std::size_t> order(g.entities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.entities[a] < g.entities[b];
  });
  std::vector<std::size_t> remap(g.entities.size());
  out.entities.reserve(g.entities.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    remap[order[pos]] = pos;
    out.entities.push_back(g.entities[order[pos]]);
  }
  for (const auto& a : g.attributes) {
    out.attributes.push_back({a.entity < remap.size() ? remap[a.entity] : a.entity, a.type});
  }
  for (const auto& r : g.relations) {
    out.relations.push_back({r.head < remap.size() ? remap[r.head] : r.head,
                             r.tail < remap.size() ? remap[r.tail] : r.tail, r.type});
  }
  std::sort(out.attributes.begin(), out.attributes.end());
  std::sort(out.relations.begin(), out.relations.end());
  return out;
}

// Set-based equality: element order does not matter.
inline bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  KnowledgeGraph ca = canonicalized(a);
  KnowledgeGraph cb = canonicalized(b);
  return ca.tokens == cb.tokens && ca.entities == cb.entities &&
         ca.attributes == cb.attributes && ca.relations == cb.relations;
}

// ---------------------------------------------------------------------------
// JSON serialization
//
// Graph format (also the corpus item format):
//   { "tokens": [str], "entities": [{"start": int, "end": int, "type": str}],
//     "attributes": [{"entity": int, "types": [str]}],
//     "relations": [{"head": int, "tail": int, "type": str}] }
// Indices reference the entities list; end is inclusive.

inline void to_json(nlohmann::json& j, const KnowledgeGraph& graph) {
  KnowledgeGraph g = canonicalized(graph);
  j = nlohmann::json::object();
  j["tokens"] = g.tokens;
  auto entities = nlohmann::json::array();
  for (const auto& e : g.entities)
    entities.push_back({{"start", e.start}, {"end", e.end}, {"type", e.type}});
  j["entities"] = entities;
  auto attributes = nlohmann::json::array();
  for (std::size_t i = 0; i < g.attributes.size();) {
    std::size_t owner = g.attributes[i].entity;
    auto types = nlohmann::json::array();
    while (i < g.attributes.size() && g.attributes[i].entity == owner) {
      types.push_back(g.attributes[i].type);
      ++i;
    }
    attributes.push_back({{"entity", owner}, {"types", types}});
  }
  j["attributes"] = attributes;
  auto relations = nlohmann::json::array();
  for (const auto& r : g.relations)
    relations.push_back({{"head", r.head}, {"tail", r.tail}, {"type", r.type}});
  j["relations"] = relations;
}

namespace detail {

inline long long require_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw ValidationError(std::string("missing or non-integer field \"") + key + "\"");
  return j[key].get<long long>();
}

inline std::size_t require_index(const nlohmann::json& j, const char* key) {
  long long v = require_int(j, key);
  if (v < 0) throw ValidationError(std::string("negative index in field \"") + key + "\"");
  return static_cast<std::size_t>(v);
}

inline std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    throw ValidationError(std::string("missing or non-string field \"") + key + "\"");
  return j[key].get<std::string>();
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, KnowledgeGraph& g) {
  g = KnowledgeGraph{};
  if (!j.is_object()) throw ValidationError("graph must be a JSON object");
  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw ValidationError("graph missing \"tokens\" array");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw ValidationError("tokens must be strings");
    g.tokens.push_back(t.get<std::string>());
  }
  if (j.contains("entities")) {
    for (const auto& e : j["entities"]) {
      g.entities.push_back({static_cast<int>(detail::require_int(e, "start")),
                            static_cast<int>(detail::require_int(e, "end")),
                            detail::require_string(e, "type")});
    }
  }
  if (j.contains("attributes")) {
    for (const auto& a : j["attributes"]) {
      std::size_t owner = detail::require_index(a, "entity");
      if (owner >= g.entities.size())
        throw ValidationError("attribute references entity index out of range: " +
                              std::to_string(owner));
      if (!a.contains("types") || !a["types"].is_array())
        throw ValidationError("attribute entry missing \"types\" array");
      for (const auto& t : a["types"]) {
        if (!t.is_string()) throw ValidationError("attribute types must be strings");
        g.attributes.push_back({owner, t.get<std::string>()});
      }
    }
  }
  if (j.contains("relations")) {
    for (const auto& r : j["relations"]) {
      std::size_t head = detail::require_index(r, "head");
      std::size_t tail = detail::require_index(r, "tail");
      if (head >= g.entities.size() || tail >= g.entities.size())
        throw ValidationError("relation references entity index out of range: " +
                              std::to_string(std::max(head, tail)));
      g.relations.push_back({head, tail, detail::require_string(r, "type")});
    }
  }
}

inline void to_json(nlohmann::json& j, const SchemaDef& s) {
  j = nlohmann::json::object();
  j["name"] = s.name;
  j["entity_types"] = s.entity_types;
  j["attribute_types"] = s.attribute_types;
  j["relation_types"] = s.relation_types;
  auto scope = nlohmann::json::object();
  for (const auto& [attr, ents] : s.attribute_scope) scope[attr] = ents;
  j["attribute_scope"] = scope;
  j["open"] = s.open;
}

inline void from_json(const nlohmann::json& j, SchemaDef& s) {
  s = SchemaDef{};
  s.name = j.value("name", std::string{});
  s.entity_types = j.value("entity_types", std::vector<std::string>{});
  s.attribute_types = j.value("attribute_types", std::vector<std::string>{});
  s.relation_types = j.value("relation_types", std::vector<std::string>{});
  if (j.contains("attribute_scope")) {
    for (const auto& [attr, ents] : j["attribute_scope"].items())
      s.attribute_scope[attr] = ents.get<std::set<std::string>>();
  }
  s.open = j.value("open", false);
  auto problems = schema_problems(s);
  if (!problems.empty()) throw ValidationError("invalid schema: " + problems.front());
}

// Stable fingerprint of a schema's full content; checkpoints refuse to
// load against a schema with a different fingerprint.
inline std::string schema_fingerprint(const SchemaDef& s) {
  nlohmann::json j = s;
  std::uint64_t h = fnv1a(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spear
