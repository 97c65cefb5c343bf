#pragma once
// Micro-averaged precision / recall / F1 over aligned gold and predicted
// sentence graphs.
//
// Matching is exact:
//   entity     (start, end, type)
//   attribute  (entity start, end, type, attribute type)
//   relation   (head entity triple, tail entity triple, relation type)
// so a relation only counts as correct when both of its endpoint entities
// are themselves correct, span and type. A predicted edge between the
// right words with a wrong endpoint type is a false positive, and the gold
// edge it missed a false negative.
//
// Scores are reported per label plus a micro average computed from the
// pooled counts. Rendered tables and the JSON report both carry
// percentages.

#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "spear/errors.hpp"
#include "spear/schema.hpp"

namespace spear {

struct PrfCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  long support() const { return tp + fn; }  // gold instances
  PrfCounts& operator+=(const PrfCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Harmonic mean of precision and recall; zero when both are zero. Scale
// does not matter, so fractions and percentages both work.
inline double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

struct PrfScores {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

inline PrfScores scores_from(const PrfCounts& c) {
  PrfScores s;
  s.precision = c.tp + c.fp > 0 ? 100.0 * static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn > 0 ? 100.0 * static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

// Pooled counts across labels; micro precision/recall/F1 come from these.
inline PrfCounts micro_average(const std::map<std::string, PrfCounts>& by_label) {
  PrfCounts total;
  for (const auto& [label, counts] : by_label) total += counts;
  return total;
}

// ---------------------------------------------------------------------------
// Matching one gold/predicted sentence pair

namespace detail {

using EntityKey = std::tuple<int, int, std::string>;                  // start, end, type
using AttributeKey = std::tuple<EntityKey, std::string>;              // entity, attribute type
using RelationKey = std::tuple<EntityKey, EntityKey, std::string>;    // head, tail, type

inline EntityKey entity_key(const EntitySpan& e) { return {e.start, e.end, e.type}; }

template <typename Key>
void tally(const std::set<Key>& gold, const std::set<Key>& pred,
           const std::string& (*label_of)(const Key&), std::map<std::string, PrfCounts>& out) {
  for (const auto& k : gold) {
    if (pred.contains(k))
      ++out[label_of(k)].tp;
    else
      ++out[label_of(k)].fn;
  }
  for (const auto& k : pred)
    if (!gold.contains(k)) ++out[label_of(k)].fp;
}

inline const std::string& entity_label(const EntityKey& k) { return std::get<2>(k); }
inline const std::string& attribute_label(const AttributeKey& k) { return std::get<1>(k); }
inline const std::string& relation_label(const RelationKey& k) { return std::get<2>(k); }

inline std::set<EntityKey> entity_keys(const KnowledgeGraph& g) {
  std::set<EntityKey> out;
  for (const auto& e : g.entities) out.insert(entity_key(e));
  return out;
}

inline std::set<AttributeKey> attribute_keys(const KnowledgeGraph& g) {
  std::set<AttributeKey> out;
  for (const auto& a : g.attributes) out.insert({entity_key(g.entities.at(a.entity)), a.type});
  return out;
}

inline std::set<RelationKey> relation_keys(const KnowledgeGraph& g) {
  std::set<RelationKey> out;
  for (const auto& r : g.relations)
    out.insert({entity_key(g.entities.at(r.head)), entity_key(g.entities.at(r.tail)), r.type});
  return out;
}

}  // namespace detail

// Per-type counts for one sentence pair, accumulated into `out`.
inline void match_entities(const KnowledgeGraph& gold, const KnowledgeGraph& pred,
                           std::map<std::string, PrfCounts>& out) {
  detail::tally(detail::entity_keys(gold), detail::entity_keys(pred), detail::entity_label, out);
}

inline void match_attributes(const KnowledgeGraph& gold, const KnowledgeGraph& pred,
                             std::map<std::string, PrfCounts>& out) {
  detail::tally(detail::attribute_keys(gold), detail::attribute_keys(pred),
                detail::attribute_label, out);
}

inline void match_relations(const KnowledgeGraph& gold, const KnowledgeGraph& pred,
                            std::map<std::string, PrfCounts>& out) {
  detail::tally(detail::relation_keys(gold), detail::relation_keys(pred), detail::relation_label,
                out);
}

inline std::map<std::string, PrfCounts> match_entities(const KnowledgeGraph& gold,
                                                       const KnowledgeGraph& pred) {
  std::map<std::string, PrfCounts> out;
  match_entities(gold, pred, out);
  return out;
}

inline std::map<std::string, PrfCounts> match_attributes(const KnowledgeGraph& gold,
                                                         const KnowledgeGraph& pred) {
  std::map<std::string, PrfCounts> out;
  match_attributes(gold, pred, out);
  return out;
}

inline std::map<std::string, PrfCounts> match_relations(const KnowledgeGraph& gold,
                                                        const KnowledgeGraph& pred) {
  std::map<std::string, PrfCounts> out;
  match_relations(gold, pred, out);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus-level evaluation report

struct ReportRow {
  std::string label;
  PrfCounts counts;
  PrfScores scores;
};

struct ReportSection {
  std::string name;
  std::vector<ReportRow> rows;
  PrfCounts micro_counts;
  PrfScores micro;
};

struct EvalReport {
  ReportSection entities;
  ReportSection attributes;
  ReportSection relations;
};

namespace detail {

// Rows in schema order first, then any label seen only in the data,
// alphabetically. Schema labels always appear, even with zero support.
inline ReportSection section_from(const std::string& name,
                                  const std::map<std::string, PrfCounts>& by_label,
                                  const std::vector<std::string>& schema_order) {
  ReportSection sec;
  sec.name = name;
  std::set<std::string> placed;
  for (const auto& label : schema_order) {
    auto it = by_label.find(label);
    PrfCounts c = it == by_label.end() ? PrfCounts{} : it->second;
    sec.rows.push_back({label, c, scores_from(c)});
    placed.insert(label);
  }
  for (const auto& [label, c] : by_label)
    if (!placed.contains(label)) sec.rows.push_back({label, c, scores_from(c)});
  sec.micro_counts = micro_average(by_label);
  sec.micro = scores_from(sec.micro_counts);
  return sec;
}

}  // namespace detail

// Scores predictions against gold, sentence by sentence. Both corpora
// must be the same sentences in the same order; a length or token
// disagreement means the caller paired the wrong files, which is worth an
// error rather than silently zeroed scores.
inline EvalReport evaluate(const std::vector<AnnotatedSentence>& gold,
                           const std::vector<AnnotatedSentence>& pred, const SchemaDef& schema) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, predictions " +
                         std::to_string(pred.size()));
  std::map<std::string, PrfCounts> ent, attr, rel;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tokens != pred[i].tokens)
      throw AlignmentError("sentence " + std::to_string(i) +
                           " has different tokens in gold and predictions");
    match_entities(gold[i], pred[i], ent);
    match_attributes(gold[i], pred[i], attr);
    match_relations(gold[i], pred[i], rel);
  }
  EvalReport report;
  report.entities = detail::section_from("entities", ent, schema.entity_types);
  report.attributes = detail::section_from("attributes", attr, schema.attribute_types);
  report.relations = detail::section_from("relations", rel, schema.relation_types);
  return report;
}

inline EvalReport evaluate(const std::vector<AnnotatedSentence>& gold,
                           const std::vector<AnnotatedSentence>& pred) {
  return evaluate(gold, pred, SchemaDef{});
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline void render_section(std::ostream& out, const ReportSection& sec) {
  std::size_t label_width = 12;
  for (const auto& row : sec.rows) label_width = std::max(label_width, row.label.size() + 2);
  out << sec.name << "\n";
  out << std::setw(static_cast<int>(label_width)) << "" << std::setw(11) << "precision"
      << std::setw(10) << "recall" << std::setw(10) << "f1-score" << std::setw(10) << "support"
      << "\n";
  auto line = [&](const std::string& label, const PrfScores& s, long support) {
    out << std::setw(static_cast<int>(label_width)) << label << std::fixed << std::setprecision(2)
        << std::setw(11) << s.precision << std::setw(10) << s.recall << std::setw(10) << s.f1
        << std::setw(10) << support << "\n";
  };
  for (const auto& row : sec.rows) line(row.label, row.scores, row.counts.support());
  out << "\n";
  line("micro avg", sec.micro, sec.micro_counts.support());
}

inline nlohmann::json section_json(const ReportSection& sec) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : sec.rows) {
    rows.push_back({{"type", row.label},
                    {"precision", row.scores.precision},
                    {"recall", row.scores.recall},
                    {"f1", row.scores.f1},
                    {"support", row.counts.support()},
                    {"tp", row.counts.tp},
                    {"fp", row.counts.fp},
                    {"fn", row.counts.fn}});
  }
  return {{"per_type", std::move(rows)},
          {"micro",
           {{"precision", sec.micro.precision},
            {"recall", sec.micro.recall},
            {"f1", sec.micro.f1},
            {"support", sec.micro_counts.support()},
            {"tp", sec.micro_counts.tp},
            {"fp", sec.micro_counts.fp},
            {"fn", sec.micro_counts.fn}}}};
}

}  // namespace detail

inline std::string render_report_text(const EvalReport& report) {
  std::ostringstream out;
  detail::render_section(out, report.entities);
  out << "\n\n";
  detail::render_section(out, report.attributes);
  out << "\n\n";
  detail::render_section(out, report.relations);
  out << "\n";
  return out.str();
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  return {{"entities", detail::section_json(report.entities)},
          {"attributes", detail::section_json(report.attributes)},
          {"relations", detail::section_json(report.relations)}};
}

}  // namespace spear
