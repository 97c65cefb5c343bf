#pragma once
// Annotated corpus I/O, train/test splitting, span enumeration, and
// negative sampling for training.
//
// Corpus file format: a JSON list of graph objects (see schema.hpp for the
// per-item layout). A versioned wrapper {"format_version": 1, "sentences":
// [...]} is also accepted on load and can be requested on write.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spear/errors.hpp"
#include "spear/rng.hpp"
#include "spear/schema.hpp"

namespace spear {

// One dataset example: a single sentence with its gold elements. Same
// shape as a predicted graph, so gold and prediction files share a format.
using AnnotatedSentence = KnowledgeGraph;

inline constexpr int kCorpusFormatVersion = 1;

// ---------------------------------------------------------------------------
// Loading / writing

namespace detail {

inline std::vector<AnnotatedSentence> corpus_from_json(const nlohmann::json& root) {
  const nlohmann::json* items = &root;
  if (root.is_object()) {
    if (!root.contains("sentences") || !root["sentences"].is_array())
      throw ValidationError("corpus object must carry a \"sentences\" array");
    items = &root["sentences"];
  } else if (!root.is_array()) {
    throw ValidationError("corpus must be a JSON list");
  }
  std::vector<AnnotatedSentence> out;
  out.reserve(items->size());
  for (std::size_t i = 0; i < items->size(); ++i) {
    try {
      AnnotatedSentence s = (*items)[i].get<AnnotatedSentence>();
      if (s.tokens.empty())
        throw ValidationError("sentence has no tokens");
      ValidationReport report = validate_graph(s);
      if (!report.ok()) {
        for (const auto& v : report.violations)
          if (v.severity == Severity::error)
            throw ValidationError(v.message);
      }
      out.push_back(std::move(s));
    } catch (const ValidationError& e) {
      throw ValidationError("sentence " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<AnnotatedSentence> parse_corpus(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("corpus is not valid JSON: ") + e.what(), e.byte);
  }
  return detail::corpus_from_json(root);
}

// Parse and additionally check every sentence against a schema vocabulary.
inline std::vector<AnnotatedSentence> parse_corpus(const std::string& text,
                                                   const SchemaDef& schema) {
  auto corpus = parse_corpus(text);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ValidationReport report = validate_graph(corpus[i], schema);
    for (const auto& v : report.violations)
      if (v.severity == Severity::error)
        throw ValidationError("sentence " + std::to_string(i) + ": " + v.message, i);
  }
  return corpus;
}

inline std::vector<AnnotatedSentence> load_corpus(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

inline std::vector<AnnotatedSentence> load_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open corpus file: " + path);
  return load_corpus(in);
}

inline std::vector<AnnotatedSentence> load_corpus_file(const std::string& path,
                                                       const SchemaDef& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), schema);
}

inline std::string corpus_to_string(const std::vector<AnnotatedSentence>& corpus,
                                    bool versioned = false) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : corpus) items.push_back(s);
  nlohmann::json root;
  if (versioned) {
    root = nlohmann::json::object();
    root["format_version"] = kCorpusFormatVersion;
    root["sentences"] = std::move(items);
  } else {
    root = std::move(items);
  }
  return root.dump(2) + "\n";
}

inline void write_corpus(std::ostream& out, const std::vector<AnnotatedSentence>& corpus,
                         bool versioned = false) {
  out << corpus_to_string(corpus, versioned);
}

inline void write_corpus_file(const std::string& path,
                              const std::vector<AnnotatedSentence>& corpus,
                              bool versioned = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file: " + path);
  write_corpus(out, corpus, versioned);
}

// ---------------------------------------------------------------------------
// Train/test splitting

// Deterministic randomized split. The test size is n * test_fraction
// rounded to the nearest integer with exact halves rounding down, so a
// 515-example corpus at 0.1 splits 464/51.
inline std::pair<std::vector<AnnotatedSentence>, std::vector<AnnotatedSentence>> split_corpus(
    const std::vector<AnnotatedSentence>& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  if (corpus.size() < 2)
    throw DegenerateSplitError("cannot split a corpus of fewer than 2 examples");
  const double exact = static_cast<double>(corpus.size()) * test_fraction;
  std::size_t test_count = static_cast<std::size_t>(exact);
  if (exact - static_cast<double>(test_count) > 0.5 + 1e-9) ++test_count;
  if (test_count >= corpus.size()) test_count = corpus.size() - 1;

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::pair<std::vector<AnnotatedSentence>, std::vector<AnnotatedSentence>> out;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos < test_count)
      out.second.push_back(corpus[order[pos]]);
    else
      out.first.push_back(corpus[order[pos]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Span enumeration and negative sampling

// All spans of length 1..min(max_len, n), ordered by start then length.
inline std::vector<TokenSpan> enumerate_spans(int n, int max_len) {
  if (n < 1) throw ContractViolation("enumerate_spans requires at least one token");
  if (max_len < 1) throw ContractViolation("enumerate_spans requires max_len >= 1");
  std::vector<TokenSpan> out;
  for (int start = 0; start < n; ++start) {
    int longest = std::min(max_len, n - start);
    for (int len = 1; len <= longest; ++len) out.push_back({start, start + len - 1});
  }
  return out;
}

// Negative training material for one sentence.
struct NegativeSamples {
  std::vector<TokenSpan> entity_negatives;                    // spans labeled "none"
  std::vector<std::pair<std::size_t, std::size_t>> relation_negatives;  // gold-entity pairs
};

// Up to `count` non-gold spans drawn uniformly without replacement from
// the enumerated pool.
inline std::vector<TokenSpan> sample_negative_entities(const AnnotatedSentence& sentence,
                                                       int count, int max_len, Rng& rng) {
  if (count < 0) throw ContractViolation("negative count must be >= 0");
  std::set<TokenSpan> gold;
  for (const auto& e : sentence.entities) gold.insert(e.span());
  std::vector<TokenSpan> pool;
  for (const auto& s : enumerate_spans(static_cast<int>(sentence.tokens.size()), max_len))
    if (!gold.contains(s)) pool.push_back(s);
  std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(count));
  // Partial Fisher-Yates: the first `take` elements are the sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

inline std::vector<TokenSpan> sample_negative_entities(const AnnotatedSentence& sentence,
                                                       int count, int max_len,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  return sample_negative_entities(sentence, count, max_len, rng);
}

// Up to `count` ordered (head, tail) pairs of distinct gold entities that
// carry no gold relation of any type, uniformly without replacement.
inline std::vector<std::pair<std::size_t, std::size_t>> sample_negative_relations(
    const std::vector<EntitySpan>& gold_entities, const std::vector<RelationEdge>& gold_relations,
    int count, Rng& rng) {
  if (count < 0) throw ContractViolation("negative count must be >= 0");
  std::set<std::pair<std::size_t, std::size_t>> related;
  for (const auto& r : gold_relations) related.emplace(r.head, r.tail);
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t h = 0; h < gold_entities.size(); ++h)
    for (std::size_t t = 0; t < gold_entities.size(); ++t)
      if (h != t && !related.contains({h, t})) pool.emplace_back(h, t);
  std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

inline std::vector<std::pair<std::size_t, std::size_t>> sample_negative_relations(
    const std::vector<EntitySpan>& gold_entities, const std::vector<RelationEdge>& gold_relations,
    int count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_negative_relations(gold_entities, gold_relations, count, rng);
}

}  // namespace spear
