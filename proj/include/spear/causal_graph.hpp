#pragma once
// The global causal graph: per-sentence knowledge graphs merged into one
// structure with provenance, queried by concept matching and traversal.
//
// Merging is a disjoint union. Edges never cross sentence boundaries;
// connectivity across sentences only arises because a concept query can
// match nodes in several sentences at once. Traversal treats edges as
// bidirectional but records the orientation of every hop, and returns
// simple paths only.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spear/encoder.hpp"
#include "spear/errors.hpp"
#include "spear/lemma.hpp"
#include "spear/schema.hpp"

namespace spear {

// One entity occurrence. Ids are graph-wide and stay stable under
// pruning, so a pruned graph's nodes still name the originals.
struct GlobalNode {
  std::size_t id = 0;
  std::size_t sentence = 0;
  int start = 0;
  int end = 0;
  std::string type;
  std::vector<std::string> attributes;
  std::string text;  // surface form of the span

  TokenSpan span() const { return {start, end}; }
};

struct GlobalEdge {
  std::size_t id = 0;
  std::size_t head = 0;  // node ids
  std::size_t tail = 0;
  std::string type;
};

struct SentenceRecord {
  std::size_t id = 0;
  std::vector<std::string> tokens;
};

struct GlobalGraph {
  std::vector<SentenceRecord> sentences;
  std::vector<GlobalNode> nodes;
  std::vector<GlobalEdge> edges;

  const GlobalNode& node(std::size_t id) const {
    for (const auto& n : nodes)
      if (n.id == id) return n;
    throw IndexError("no node with id " + std::to_string(id));
  }

  const SentenceRecord& sentence(std::size_t id) const {
    for (const auto& s : sentences)
      if (s.id == id) return s;
    throw IndexError("no sentence with id " + std::to_string(id));
  }
};

// ---------------------------------------------------------------------------
// Merging

// Disjoint union of per-sentence graphs. Node and edge counts are the sums
// of the inputs; each node remembers its sentence, span, and surface text.
inline GlobalGraph merge_graphs(
    const std::vector<std::pair<std::size_t, KnowledgeGraph>>& graphs) {
  GlobalGraph g;
  std::set<std::size_t> seen;
  for (const auto& [sentence_id, kg] : graphs) {
    if (!seen.insert(sentence_id).second)
      throw MergeError("duplicate sentence id " + std::to_string(sentence_id));
    auto structural = validate_graph(kg);
    if (!structural.ok())
      throw ValidationError("sentence " + std::to_string(sentence_id) + ": " +
                            structural.violations.front().message);

    g.sentences.push_back({sentence_id, kg.tokens});
    const std::size_t base = g.nodes.size();
    for (std::size_t i = 0; i < kg.entities.size(); ++i) {
      const auto& e = kg.entities[i];
      std::string text;
      for (int t = e.start; t <= e.end; ++t) {
        if (t > e.start) text += ' ';
        text += kg.tokens[static_cast<std::size_t>(t)];
      }
      g.nodes.push_back({base + i, sentence_id, e.start, e.end, e.type, {}, std::move(text)});
    }
    for (const auto& a : kg.attributes) g.nodes[base + a.entity].attributes.push_back(a.type);
    for (const auto& r : kg.relations)
      g.edges.push_back({g.edges.size(), base + r.head, base + r.tail, r.type});
  }
  return g;
}

inline GlobalGraph merge_corpus(const std::vector<KnowledgeGraph>& corpus) {
  std::vector<std::pair<std::size_t, KnowledgeGraph>> graphs;
  graphs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) graphs.emplace_back(i, corpus[i]);
  return merge_graphs(graphs);
}

// Recovers the per-sentence graph for one sentence id; merge followed by
// this is the identity on each input.
inline KnowledgeGraph sentence_subgraph(const GlobalGraph& g, std::size_t sentence_id) {
  KnowledgeGraph kg;
  kg.tokens = g.sentence(sentence_id).tokens;
  std::map<std::size_t, std::size_t> local;  // node id -> index in kg.entities
  for (const auto& n : g.nodes) {
    if (n.sentence != sentence_id) continue;
    local[n.id] = kg.entities.size();
    kg.entities.push_back({n.start, n.end, n.type});
    for (const auto& attr : n.attributes) kg.attributes.push_back({local[n.id], attr});
  }
  for (const auto& e : g.edges) {
    auto h = local.find(e.head);
    auto t = local.find(e.tail);
    if (h == local.end() && t == local.end()) continue;
    if (h == local.end() || t == local.end())
      throw MergeError("edge " + std::to_string(e.id) + " crosses a sentence boundary");
    kg.relations.push_back({h->second, t->second, e.type});
  }
  return kg;
}

// ---------------------------------------------------------------------------
// Concept matching

enum class MatcherKind { lemma, vector };

struct ConceptQuery {
  std::string surface;
  MatcherKind matcher = MatcherKind::lemma;
  double threshold = 0.5;  // cosine cutoff, vector mode only
};

namespace detail {

inline std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string t;
  while (in >> t) out.push_back(std::move(t));
  return out;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace detail

// Node ids whose span matches the query.
//
// Lemma mode: a node matches when any token inside its span shares a lemma
// with any token of the query surface (case-insensitive), so "pray" finds
// "prayed", "prayer", "prayers". Vector mode: the node's maxpooled span
// vector must reach the cosine threshold against the encoded query; it
// needs an encoder and throws ConfigError without one.
inline std::set<std::size_t> match_concepts(const ConceptQuery& query, const GlobalGraph& graph,
                                            const Encoder* encoder = nullptr) {
  if (query.surface.empty()) throw ConfigError("concept query has an empty surface form");
  auto query_tokens = detail::whitespace_tokens(query.surface);
  if (query_tokens.empty()) throw ConfigError("concept query has an empty surface form");

  std::set<std::size_t> out;
  if (query.matcher == MatcherKind::lemma) {
    std::set<std::string> wanted;
    for (const auto& t : query_tokens) wanted.insert(lemma_of(t));
    for (const auto& n : graph.nodes) {
      const auto& tokens = graph.sentence(n.sentence).tokens;
      for (int i = n.start; i <= n.end; ++i) {
        if (wanted.contains(lemma_of(tokens[static_cast<std::size_t>(i)]))) {
          out.insert(n.id);
          break;
        }
      }
    }
    return out;
  }

  if (!encoder) throw ConfigError("vector concept matching needs an encoder");
  Eigen::VectorXd query_vec = maxpool(encoder->encode(query_tokens).tokens);
  std::map<std::size_t, TokenEmbeddings> encoded;  // per sentence, on demand
  for (const auto& n : graph.nodes) {
    auto it = encoded.find(n.sentence);
    if (it == encoded.end())
      it = encoded.emplace(n.sentence, encoder->encode(graph.sentence(n.sentence).tokens)).first;
    Eigen::VectorXd span_vec =
        maxpool(it->second.tokens.middleCols(n.start, n.end - n.start + 1));
    if (detail::cosine(span_vec, query_vec) >= query.threshold) out.insert(n.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traversal

struct PathStep {
  std::size_t edge = 0;  // edge id
  bool forward = true;   // followed head->tail, or reversed
};

// Alternating node/step sequence: nodes has one more element than steps.
// A node matching both endpoint queries yields a zero-step path, flagged
// trivial.
struct TraversalPath {
  std::vector<std::size_t> nodes;
  std::vector<PathStep> steps;

  bool trivial() const { return steps.empty(); }
};

inline bool operator==(const PathStep& a, const PathStep& b) {
  return a.edge == b.edge && a.forward == b.forward;
}

inline bool operator==(const TraversalPath& a, const TraversalPath& b) {
  if (a.nodes != b.nodes || a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i)
    if (!(a.steps[i] == b.steps[i])) return false;
  return true;
}

namespace detail {

inline bool path_less(const TraversalPath& a, const TraversalPath& b) {
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].edge != b.steps[i].edge) return a.steps[i].edge < b.steps[i].edge;
    if (a.steps[i].forward != b.steps[i].forward) return a.steps[i].forward < b.steps[i].forward;
  }
  return false;
}

}  // namespace detail

// All simple paths of at most max_hops edges from any source node to any
// destination node, following edges in either direction. The result is
// sorted (shortest first, then by node and edge ids) and duplicate-free,
// so it is deterministic for a given graph.
inline std::vector<TraversalPath> find_paths(const std::set<std::size_t>& sources,
                                             const std::set<std::size_t>& destinations,
                                             const GlobalGraph& graph, int max_hops = 6) {
  if (max_hops < 1) throw ConfigError("max_hops must be >= 1");

  struct Hop {
    std::size_t to;
    std::size_t edge;
    bool forward;
  };
  std::map<std::size_t, std::vector<Hop>> adjacent;
  for (const auto& n : graph.nodes) adjacent[n.id];  // ensure isolated nodes resolve
  for (const auto& e : graph.edges) {
    adjacent.at(e.head).push_back({e.tail, e.id, true});
    adjacent.at(e.tail).push_back({e.head, e.id, false});
  }

  std::vector<TraversalPath> out;
  TraversalPath current;
  std::set<std::size_t> on_path;

  auto dfs = [&](auto&& self, std::size_t at) -> void {
    if (destinations.contains(at) && !current.steps.empty()) out.push_back(current);
    if (static_cast<int>(current.steps.size()) >= max_hops) return;
    for (const auto& hop : adjacent.at(at)) {
      if (on_path.contains(hop.to)) continue;
      current.nodes.push_back(hop.to);
      current.steps.push_back({hop.edge, hop.forward});
      on_path.insert(hop.to);
      self(self, hop.to);
      on_path.erase(hop.to);
      current.steps.pop_back();
      current.nodes.pop_back();
    }
  };

  for (std::size_t src : sources) {
    if (!adjacent.contains(src)) throw IndexError("source node " + std::to_string(src) +
                                                  " is not in the graph");
    if (destinations.contains(src)) out.push_back({{src}, {}});
    current = {{src}, {}};
    on_path = {src};
    dfs(dfs, src);
  }
  for (std::size_t dst : destinations)
    if (!adjacent.contains(dst))
      throw IndexError("destination node " + std::to_string(dst) + " is not in the graph");

  std::sort(out.begin(), out.end(), detail::path_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// The sub-graph spanned by a path set: exactly the nodes and edges lying
// on at least one returned path, everything else pruned. Sentence records
// are kept for every surviving node. Pruning is idempotent.
inline GlobalGraph prune_to_paths(const GlobalGraph& graph,
                                  const std::vector<TraversalPath>& paths) {
  std::set<std::size_t> keep_nodes, keep_edges, keep_sentences;
  for (const auto& p : paths) {
    for (auto n : p.nodes) keep_nodes.insert(n);
    for (const auto& s : p.steps) keep_edges.insert(s.edge);
  }
  GlobalGraph out;
  for (const auto& n : graph.nodes) {
    if (!keep_nodes.contains(n.id)) continue;
    out.nodes.push_back(n);
    keep_sentences.insert(n.sentence);
  }
  for (const auto& e : graph.edges)
    if (keep_edges.contains(e.id)) out.edges.push_back(e);
  for (const auto& s : graph.sentences)
    if (keep_sentences.contains(s.id)) out.sentences.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Export

struct DotOptions {
  bool label_modifiers = false;  // figures leave modifier edges unlabeled
  std::string modifier_type = "modifier";
  std::string graph_name = "spear";
};

namespace detail {

inline std::string dot_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

}  // namespace detail

// Graphviz rendering in the style of the figures: boxed nodes carrying the
// surface text, the entity type, and any attributes in parentheses; edges
// labeled with their relation type except for modifiers, which stay
// unlabeled unless asked for.
inline std::string to_dot(const GlobalGraph& graph, const DotOptions& options = {}) {
  std::ostringstream out;
  out << "digraph " << options.graph_name << " {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=box];\n";
  for (const auto& n : graph.nodes) {
    std::string label = n.text + "\n" + n.type;
    if (!n.attributes.empty()) {
      label += "\n(";
      for (std::size_t i = 0; i < n.attributes.size(); ++i) {
        if (i) label += ", ";
        label += n.attributes[i];
      }
      label += ")";
    }
    out << "  n" << n.id << " [label=\"" << detail::dot_escape(label) << "\"];\n";
  }
  for (const auto& e : graph.edges) {
    out << "  n" << e.head << " -> n" << e.tail;
    if (options.label_modifiers || e.type != options.modifier_type)
      out << " [label=\"" << detail::dot_escape(e.type) << "\"]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

inline void to_json(nlohmann::json& j, const GlobalNode& n) {
  j = {{"id", n.id},   {"sentence", n.sentence},     {"start", n.start}, {"end", n.end},
       {"type", n.type}, {"attributes", n.attributes}, {"text", n.text}};
}

inline void from_json(const nlohmann::json& j, GlobalNode& n) {
  n.id = j.at("id").get<std::size_t>();
  n.sentence = j.at("sentence").get<std::size_t>();
  n.start = j.at("start").get<int>();
  n.end = j.at("end").get<int>();
  n.type = j.at("type").get<std::string>();
  n.attributes = j.value("attributes", std::vector<std::string>{});
  n.text = j.value("text", std::string{});
}

inline void to_json(nlohmann::json& j, const GlobalEdge& e) {
  j = {{"id", e.id}, {"head", e.head}, {"tail", e.tail}, {"type", e.type}};
}

inline void from_json(const nlohmann::json& j, GlobalEdge& e) {
  e.id = j.at("id").get<std::size_t>();
  e.head = j.at("head").get<std::size_t>();
  e.tail = j.at("tail").get<std::size_t>();
  e.type = j.at("type").get<std::string>();
}

inline void to_json(nlohmann::json& j, const SentenceRecord& s) {
  j = {{"id", s.id}, {"tokens", s.tokens}};
}

inline void from_json(const nlohmann::json& j, SentenceRecord& s) {
  s.id = j.at("id").get<std::size_t>();
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
}

inline void to_json(nlohmann::json& j, const GlobalGraph& g) {
  j = {{"sentences", g.sentences}, {"nodes", g.nodes}, {"edges", g.edges}};
}

inline void from_json(const nlohmann::json& j, GlobalGraph& g) {
  g.sentences = j.value("sentences", std::vector<SentenceRecord>{});
  g.nodes = j.value("nodes", std::vector<GlobalNode>{});
  g.edges = j.value("edges", std::vector<GlobalEdge>{});
}

inline nlohmann::json paths_to_json(const std::vector<TraversalPath>& paths,
                                    const GlobalGraph& graph) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json nodes = nlohmann::json::array();
    for (auto id : p.nodes) {
      const auto& n = graph.node(id);
      nodes.push_back({{"id", id}, {"text", n.text}, {"type", n.type}});
    }
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : p.steps) {
      const GlobalEdge* edge = nullptr;
      for (const auto& e : graph.edges)
        if (e.id == s.edge) {
          edge = &e;
          break;
        }
      if (!edge) throw IndexError("path references unknown edge " + std::to_string(s.edge));
      steps.push_back({{"edge", s.edge}, {"type", edge->type}, {"forward", s.forward}});
    }
    out.push_back({{"nodes", std::move(nodes)},
                   {"steps", std::move(steps)},
                   {"trivial", p.trivial()}});
  }
  return out;
}

// Renders either a whole graph or a path set (pruned first) in the chosen
// format.
inline std::string export_graph(const GlobalGraph& graph, const std::string& format,
                                const DotOptions& options = {}) {
  if (format == "dot") return to_dot(graph, options);
  if (format == "json") {
    nlohmann::json j = graph;
    return j.dump(2) + "\n";
  }
  throw ConfigError("unknown export format: " + format + " (expected \"dot\" or \"json\")");
}

inline std::string export_paths(const std::vector<TraversalPath>& paths, const GlobalGraph& graph,
                                const std::string& format, const DotOptions& options = {}) {
  if (format == "dot") return to_dot(prune_to_paths(graph, paths), options);
  if (format == "json") return paths_to_json(paths, graph).dump(2) + "\n";
  throw ConfigError("unknown export format: " + format + " (expected \"dot\" or \"json\")");
}

}  // namespace spear
