#pragma once
// Shared test utilities: fixture locations, scratch directories, synthetic
// corpora, and independent brute-force oracles that the library code is
// checked against.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "spear/spear.hpp"

namespace helpers {

inline std::filesystem::path data_dir() { return SPEAR_DATA_DIR; }

inline std::filesystem::path claims_fixture() { return data_dir() / "claims_sample.json"; }
inline std::filesystem::path ethnographic_fixture() {
  return data_dir() / "ethnographic_sample.json";
}

// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spear_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<unsigned>(std::hash<const void*>{}(this) & 0xffff)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Synthetic corpora

// Ten four-token sentences of the form "<subject> <verb> <object object>"
// under the claims schema. Every sentence has the same gold structure, so
// a model only has to learn lexical identity plus span position, which the
// deterministic encoder expresses cleanly. Used for overfit checks.
inline std::vector<spear::AnnotatedSentence> synthetic_corpus() {
  struct Row {
    const char* subject;
    const char* verb;
    const char* obj1;
    const char* obj2;
  };
  const std::vector<Row> rows = {
      {"smoking", "raises", "cancer", "risk"},
      {"exercise", "lowers", "obesity", "rates"},
      {"poverty", "raises", "stress", "levels"},
      {"vaccination", "lowers", "infection", "counts"},
      {"income", "predicts", "health", "outcomes"},
      {"education", "predicts", "job", "stability"},
      {"pollution", "tracks", "asthma", "cases"},
      {"humidity", "tracks", "mold", "growth"},
      {"isolation", "raises", "anxiety", "scores"},
      {"sunlight", "lowers", "depression", "symptoms"},
  };
  const std::map<std::string, std::vector<std::string>> verb_attrs = {
      {"raises", {"causation", "increases"}},
      {"lowers", {"causation", "decreases"}},
      {"predicts", {"indicates"}},
      {"tracks", {"correlation"}},
  };
  const std::map<std::string, std::string> verb_edge = {{"raises", "q+"}, {"lowers", "q-"}};

  std::vector<spear::AnnotatedSentence> corpus;
  for (const auto& row : rows) {
    spear::AnnotatedSentence s;
    s.tokens = {row.subject, row.verb, row.obj1, row.obj2};
    s.entities = {{0, 0, "factor"}, {1, 1, "association"}, {2, 3, "factor"}};
    for (const auto& a : verb_attrs.at(row.verb)) s.attributes.push_back({1, a});
    s.relations = {{1, 0, "arg0"}, {1, 2, "arg1"}};
    auto q = verb_edge.find(row.verb);
    if (q != verb_edge.end()) s.relations.push_back({0, 2, q->second});
    corpus.push_back(std::move(s));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Random graph generation (for oracle comparisons)

// A small random sentence graph: up to max_entities entities over n_tokens
// tokens, random attributes and relations over them. Structurally valid by
// construction.
inline spear::KnowledgeGraph random_graph(spear::Rng& rng, int n_tokens = 8,
                                          int max_entities = 6) {
  static const std::vector<std::string> entity_types = {"factor", "association", "qualifier"};
  static const std::vector<std::string> attribute_types = {"causation", "increases", "test"};
  static const std::vector<std::string> relation_types = {"arg0", "arg1", "q-"};

  spear::KnowledgeGraph g;
  for (int i = 0; i < n_tokens; ++i) g.tokens.push_back("w" + std::to_string(i));

  std::set<std::pair<int, int>> used;
  int want = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_entities)));
  for (int i = 0; i < want; ++i) {
    int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_tokens)));
    int len = 1 + static_cast<int>(rng.below(3));
    int end = std::min(start + len - 1, n_tokens - 1);
    if (!used.insert({start, end}).second) continue;
    g.entities.push_back(
        {start, end, entity_types[rng.below(entity_types.size())]});
  }
  for (std::size_t e = 0; e < g.entities.size(); ++e) {
    for (const auto& a : attribute_types)
      if (rng.below(4) == 0) g.attributes.push_back({e, a});
  }
  for (std::size_t h = 0; h < g.entities.size(); ++h) {
    for (std::size_t t = 0; t < g.entities.size(); ++t) {
      if (h == t) continue;
      if (rng.below(4) == 0)
        g.relations.push_back({h, t, relation_types[rng.below(relation_types.size())]});
    }
  }
  return g;
}

// A randomly perturbed copy: entities dropped, retyped, shifted, or
// invented, with attributes and relations rebuilt over the survivors.
inline spear::KnowledgeGraph perturb_graph(const spear::KnowledgeGraph& gold, spear::Rng& rng) {
  spear::KnowledgeGraph p;
  p.tokens = gold.tokens;
  const int n = static_cast<int>(gold.tokens.size());

  std::set<std::pair<int, int>> used;
  std::vector<long> sources;  // index into gold.entities, or -1 for invented
  for (std::size_t i = 0; i < gold.entities.size(); ++i) {
    spear::EntitySpan e = gold.entities[i];
    switch (rng.below(4)) {
      case 0:  // keep
        break;
      case 1:  // retype
        e.type = e.type == "factor" ? "qualifier" : "factor";
        break;
      case 2:  // shift a boundary
        if (e.end + 1 < n)
          ++e.end;
        else if (e.start > 0)
          --e.start;
        break;
      default:  // drop
        continue;
    }
    if (!used.insert({e.start, e.end}).second) continue;
    p.entities.push_back(e);
    sources.push_back(static_cast<long>(i));
  }
  if (rng.below(2) == 0) {  // invent one
    int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int end = std::min(start + static_cast<int>(rng.below(2)), n - 1);
    if (used.insert({start, end}).second) {
      p.entities.push_back({start, end, "association"});
      sources.push_back(-1);
    }
  }

  for (std::size_t i = 0; i < p.entities.size(); ++i) {
    for (const auto& a : std::vector<std::string>{"causation", "increases", "test"})
      if (rng.below(4) == 0) p.attributes.push_back({i, a});
  }
  std::set<std::pair<std::size_t, std::size_t>> edge_used;
  for (std::size_t h = 0; h < p.entities.size(); ++h)
    for (std::size_t t = 0; t < p.entities.size(); ++t) {
      if (h == t) continue;
      if (rng.below(4) == 0 && edge_used.insert({h, t}).second)
        p.relations.push_back(
            {h, t, std::vector<std::string>{"arg0", "arg1", "q-"}[rng.below(3)]});
    }
  return p;
}

// ---------------------------------------------------------------------------
// Brute-force scoring oracle
//
// Resolves every annotation to a fully self-contained string key, then
// counts per-label TP/FP/FN by set intersection. Deliberately shares no
// code with the scorer.

struct OracleCounts {
  std::map<std::string, long> tp, fp, fn;
};

namespace oracle_detail {

inline std::string ent(const spear::KnowledgeGraph& g, std::size_t i) {
  const auto& e = g.entities[i];
  return std::to_string(e.start) + ":" + std::to_string(e.end) + ":" + e.type;
}

inline void count(const std::map<std::string, std::set<std::string>>& gold,
                  const std::map<std::string, std::set<std::string>>& pred, OracleCounts& out) {
  std::set<std::string> labels;
  for (const auto& [l, keys] : gold) labels.insert(l);
  for (const auto& [l, keys] : pred) labels.insert(l);
  for (const auto& label : labels) {
    static const std::set<std::string> none;
    const auto& g = gold.contains(label) ? gold.at(label) : none;
    const auto& p = pred.contains(label) ? pred.at(label) : none;
    std::vector<std::string> both;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(both));
    out.tp[label] += static_cast<long>(both.size());
    out.fn[label] += static_cast<long>(g.size() - both.size());
    out.fp[label] += static_cast<long>(p.size() - both.size());
  }
}

}  // namespace oracle_detail

inline OracleCounts oracle_entities(const spear::KnowledgeGraph& gold,
                                    const spear::KnowledgeGraph& pred) {
  std::map<std::string, std::set<std::string>> g, p;
  for (std::size_t i = 0; i < gold.entities.size(); ++i)
    g[gold.entities[i].type].insert(oracle_detail::ent(gold, i));
  for (std::size_t i = 0; i < pred.entities.size(); ++i)
    p[pred.entities[i].type].insert(oracle_detail::ent(pred, i));
  OracleCounts out;
  oracle_detail::count(g, p, out);
  return out;
}

inline OracleCounts oracle_attributes(const spear::KnowledgeGraph& gold,
                                      const spear::KnowledgeGraph& pred) {
  std::map<std::string, std::set<std::string>> g, p;
  for (const auto& a : gold.attributes)
    g[a.type].insert(oracle_detail::ent(gold, a.entity) + "#" + a.type);
  for (const auto& a : pred.attributes)
    p[a.type].insert(oracle_detail::ent(pred, a.entity) + "#" + a.type);
  OracleCounts out;
  oracle_detail::count(g, p, out);
  return out;
}

inline OracleCounts oracle_relations(const spear::KnowledgeGraph& gold,
                                     const spear::KnowledgeGraph& pred) {
  std::map<std::string, std::set<std::string>> g, p;
  for (const auto& r : gold.relations)
    g[r.type].insert(oracle_detail::ent(gold, r.head) + ">" + oracle_detail::ent(gold, r.tail) +
                     "#" + r.type);
  for (const auto& r : pred.relations)
    p[r.type].insert(oracle_detail::ent(pred, r.head) + ">" + oracle_detail::ent(pred, r.tail) +
                     "#" + r.type);
  OracleCounts out;
  oracle_detail::count(g, p, out);
  return out;
}

// True when the library's per-label counts equal the oracle's.
inline bool counts_agree(const std::map<std::string, spear::PrfCounts>& lib,
                         const OracleCounts& oracle) {
  std::set<std::string> labels;
  for (const auto& [l, c] : lib) labels.insert(l);
  for (const auto& [l, c] : oracle.tp) labels.insert(l);
  for (const auto& label : labels) {
    spear::PrfCounts c = lib.contains(label) ? lib.at(label) : spear::PrfCounts{};
    long tp = oracle.tp.contains(label) ? oracle.tp.at(label) : 0;
    long fp = oracle.fp.contains(label) ? oracle.fp.at(label) : 0;
    long fn = oracle.fn.contains(label) ? oracle.fn.at(label) : 0;
    if (c.tp != tp || c.fp != fp || c.fn != fn) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive traversal oracle
//
// Plain recursive enumeration of simple paths with bidirectional edges,
// independent of the library's search.

inline void oracle_paths_from(const spear::GlobalGraph& graph, std::size_t at,
                              const std::set<std::size_t>& destinations, int max_hops,
                              std::vector<std::size_t>& nodes,
                              std::vector<spear::PathStep>& steps,
                              std::set<std::size_t>& visited,
                              std::vector<spear::TraversalPath>& out) {
  if (destinations.contains(at) && !steps.empty()) out.push_back({nodes, steps});
  if (static_cast<int>(steps.size()) >= max_hops) return;
  for (const auto& e : graph.edges) {
    std::size_t next;
    bool forward;
    if (e.head == at) {
      next = e.tail;
      forward = true;
    } else if (e.tail == at) {
      next = e.head;
      forward = false;
    } else {
      continue;
    }
    if (visited.contains(next)) continue;
    visited.insert(next);
    nodes.push_back(next);
    steps.push_back({e.id, forward});
    oracle_paths_from(graph, next, destinations, max_hops, nodes, steps, visited, out);
    steps.pop_back();
    nodes.pop_back();
    visited.erase(next);
  }
}

inline std::vector<spear::TraversalPath> oracle_find_paths(const std::set<std::size_t>& sources,
                                                           const std::set<std::size_t>& dests,
                                                           const spear::GlobalGraph& graph,
                                                           int max_hops) {
  std::vector<spear::TraversalPath> out;
  for (auto src : sources) {
    if (dests.contains(src)) out.push_back({{src}, {}});
    std::vector<std::size_t> nodes{src};
    std::vector<spear::PathStep> steps;
    std::set<std::size_t> visited{src};
    oracle_paths_from(graph, src, dests, max_hops, nodes, steps, visited, out);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    auto key = [](const spear::TraversalPath& p) {
      std::vector<std::pair<std::size_t, bool>> k;
      for (const auto& s : p.steps) k.emplace_back(s.edge, s.forward);
      return k;
    };
    return key(a) < key(b);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Order-insensitive comparison of two path sets.
inline bool same_paths(std::vector<spear::TraversalPath> a, std::vector<spear::TraversalPath> b) {
  auto key = [](const spear::TraversalPath& p) {
    std::string k;
    for (auto n : p.nodes) k += std::to_string(n) + ",";
    k += "|";
    for (const auto& s : p.steps) k += std::to_string(s.edge) + (s.forward ? "f" : "r") + ",";
    return k;
  };
  std::vector<std::string> ka, kb;
  for (const auto& p : a) ka.push_back(key(p));
  for (const auto& p : b) kb.push_back(key(p));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

}  // namespace helpers
