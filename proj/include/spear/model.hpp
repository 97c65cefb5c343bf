#pragma once
// The joint span extraction model: a shared encoder feeding three linear
// heads.
//
//   entity head    - softmax over entity types plus a "none" class, on
//                    span representations; only spans whose argmax is a
//                    real type survive to the later stages
//   attribute head - independent sigmoids per attribute type, on the
//                    surviving spans (multi-label)
//   relation head  - independent sigmoids per relation type, on ordered
//                    pairs of surviving spans
//
// Pair input layout (fixed):
//   pooled-head (+) pooled-tail (+) between-context (+) w_head (+) w_tail
// where between-context is the maxpool over tokens strictly between the
// two spans (zeros when the gap is empty), standing in for the sequence
// vector used by the single-span heads.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spear/corpus.hpp"
#include "spear/encoder.hpp"
#include "spear/errors.hpp"
#include "spear/rng.hpp"
#include "spear/schema.hpp"

namespace spear {

struct ModelConfig {
  SchemaDef schema;
  int max_span_len = 10;
  int width_dim = 25;
  double relation_threshold = 0.4;
  double attribute_threshold = 0.5;
  int epochs = 20;
  std::uint64_t seed = 42;
  int negative_entities = 100;   // per sentence
  int negative_relations = 100;  // per sentence
  double learning_rate = 0.02;
  EncoderConfig encoder;
};

inline void validate_config(const ModelConfig& c) {
  if (!(c.relation_threshold > 0.0 && c.relation_threshold < 1.0))
    throw ConfigError("relation_threshold must lie in (0, 1)");
  if (!(c.attribute_threshold > 0.0 && c.attribute_threshold < 1.0))
    throw ConfigError("attribute_threshold must lie in (0, 1)");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.max_span_len < 1) throw ConfigError("max_span_len must be >= 1");
  if (c.width_dim < 1) throw ConfigError("width_dim must be >= 1");
  if (c.negative_entities < 0 || c.negative_relations < 0)
    throw ConfigError("negative sample counts must be >= 0");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  auto problems = schema_problems(c.schema);
  if (!problems.empty()) throw ConfigError("invalid schema: " + problems.front());
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json::object();
  j["schema"] = c.schema;
  j["max_span_len"] = c.max_span_len;
  j["width_dim"] = c.width_dim;
  j["relation_threshold"] = c.relation_threshold;
  j["attribute_threshold"] = c.attribute_threshold;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["negative_entities"] = c.negative_entities;
  j["negative_relations"] = c.negative_relations;
  j["learning_rate"] = c.learning_rate;
  j["encoder"] = c.encoder;
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  if (j.contains("schema")) c.schema = j["schema"].get<SchemaDef>();
  c.max_span_len = j.value("max_span_len", 10);
  c.width_dim = j.value("width_dim", 25);
  c.relation_threshold = j.value("relation_threshold", 0.4);
  c.attribute_threshold = j.value("attribute_threshold", 0.5);
  c.epochs = j.value("epochs", 20);
  c.seed = j.value("seed", std::uint64_t{42});
  c.negative_entities = j.value("negative_entities", 100);
  c.negative_relations = j.value("negative_relations", 100);
  c.learning_rate = j.value("learning_rate", 0.02);
  if (j.contains("encoder")) c.encoder = j["encoder"].get<EncoderConfig>();
}

struct SpearModel {
  ModelConfig config;
  std::shared_ptr<const Encoder> encoder;
  WidthEmbeddingTable width;
  Eigen::MatrixXd entity_w;     // (|entity types| + 1) x span_dim, last row = none
  Eigen::VectorXd entity_b;
  Eigen::MatrixXd relation_w;   // |relation types| x pair_dim
  Eigen::VectorXd relation_b;
  Eigen::MatrixXd attribute_w;  // |attribute types| x span_dim
  Eigen::VectorXd attribute_b;

  int span_dim() const { return 2 * encoder->dim() + config.width_dim; }
  int pair_dim() const { return 3 * encoder->dim() + 2 * config.width_dim; }
  int none_index() const { return static_cast<int>(config.schema.entity_types.size()); }
};

// Flat view over one parameter tensor; the optimizer and the finite
// difference check both walk these.
struct ParamView {
  std::string name;
  double* data;
  std::ptrdiff_t size;
};

namespace detail {

inline void collect_views(std::vector<ParamView>& out, const std::string& name,
                          Eigen::MatrixXd& m) {
  out.push_back({name, m.data(), static_cast<std::ptrdiff_t>(m.size())});
}
inline void collect_views(std::vector<ParamView>& out, const std::string& name,
                          Eigen::VectorXd& v) {
  out.push_back({name, v.data(), static_cast<std::ptrdiff_t>(v.size())});
}

}  // namespace detail

inline std::vector<ParamView> parameter_views(SpearModel& m) {
  std::vector<ParamView> out;
  detail::collect_views(out, "width", m.width.rows);
  detail::collect_views(out, "entity_w", m.entity_w);
  detail::collect_views(out, "entity_b", m.entity_b);
  detail::collect_views(out, "relation_w", m.relation_w);
  detail::collect_views(out, "relation_b", m.relation_b);
  detail::collect_views(out, "attribute_w", m.attribute_w);
  detail::collect_views(out, "attribute_b", m.attribute_b);
  return out;
}

// Fresh model with small random parameters, deterministic per config seed.
inline SpearModel init_model(const ModelConfig& config,
                             std::shared_ptr<const Encoder> encoder = nullptr) {
  validate_config(config);
  SpearModel m;
  m.config = config;
  m.encoder = encoder ? std::move(encoder) : make_encoder(config.encoder);
  Rng rng(mix_seeds(config.seed, fnv1a("init")));
  m.width = WidthEmbeddingTable::init(config.max_span_len, config.width_dim, rng);
  auto fill = [&](Eigen::MatrixXd& w, int rows, int cols) {
    w.resize(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = scale * rng.normal();
  };
  const int n_ent = static_cast<int>(config.schema.entity_types.size()) + 1;
  const int n_rel = static_cast<int>(config.schema.relation_types.size());
  const int n_attr = static_cast<int>(config.schema.attribute_types.size());
  fill(m.entity_w, n_ent, m.span_dim());
  fill(m.relation_w, n_rel, m.pair_dim());
  fill(m.attribute_w, n_attr, m.span_dim());
  m.entity_b = Eigen::VectorXd::Zero(n_ent);
  m.relation_b = Eigen::VectorXd::Zero(n_rel);
  m.attribute_b = Eigen::VectorXd::Zero(n_attr);
  return m;
}

// ---------------------------------------------------------------------------
// Classifier heads

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Normalized distribution over entity types plus "none" (the last class)
// for each span. Predicted type is the argmax.
inline std::vector<Eigen::VectorXd> classify_entities(const std::vector<SpanRepresentation>& spans,
                                                      const SpearModel& model) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(spans.size());
  for (const auto& s : spans) {
    if (s.vec.size() != model.entity_w.cols())
      throw ConfigError("span representation dimension " + std::to_string(s.vec.size()) +
                        " does not match entity classifier input " +
                        std::to_string(model.entity_w.cols()));
    out.push_back(softmax(model.entity_w * s.vec + model.entity_b));
  }
  return out;
}

// Independent probability per attribute type for each span. The predicted
// set is every type with probability >= the attribute threshold.
inline std::vector<Eigen::VectorXd> classify_attributes(
    const std::vector<SpanRepresentation>& spans, const SpearModel& model) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(spans.size());
  for (const auto& s : spans) {
    if (s.vec.size() != model.attribute_w.cols())
      throw ConfigError("span representation dimension " + std::to_string(s.vec.size()) +
                        " does not match attribute classifier input " +
                        std::to_string(model.attribute_w.cols()));
    Eigen::VectorXd z = model.attribute_w * s.vec + model.attribute_b;
    for (int i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
    out.push_back(std::move(z));
  }
  return out;
}

struct PairRepresentation {
  Eigen::VectorXd vec;  // see layout note at the top of this header
  TokenSpan head;
  TokenSpan tail;
};

inline PairRepresentation pair_representation(const TokenEmbeddings& emb, TokenSpan head,
                                              TokenSpan tail, const WidthEmbeddingTable& widths) {
  const int d = emb.dim();
  PairRepresentation rep;
  rep.head = head;
  rep.tail = tail;
  rep.vec.resize(3 * d + 2 * widths.dim());
  rep.vec.head(d) = maxpool(emb.tokens.middleCols(head.start, head.length()));
  rep.vec.segment(d, d) = maxpool(emb.tokens.middleCols(tail.start, tail.length()));
  rep.vec.segment(2 * d, d) = between_context(emb, head, tail);
  rep.vec.segment(3 * d, widths.dim()) = widths.for_length(head.length());
  rep.vec.tail(widths.dim()) = widths.for_length(tail.length());
  return rep;
}

// Independent probability per relation type for each ordered (head, tail)
// pair. Predicted edges are every type with probability >= the relation
// threshold.
inline std::vector<Eigen::VectorXd> classify_relations(
    const std::vector<PairRepresentation>& pairs, const SpearModel& model) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.head == p.tail)
      throw ContractViolation("relation classifier fed a self-pair at span [" +
                              std::to_string(p.head.start) + ", " + std::to_string(p.head.end) +
                              "]");
    if (p.vec.size() != model.relation_w.cols())
      throw ConfigError("pair representation dimension " + std::to_string(p.vec.size()) +
                        " does not match relation classifier input " +
                        std::to_string(model.relation_w.cols()));
    Eigen::VectorXd z = model.relation_w * p.vec + model.relation_b;
    for (int i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
    out.push_back(std::move(z));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

// Full pipeline for one sentence: enumerate spans, classify, filter out
// "none" spans, then attributes and all ordered pair relations on the
// survivors. Thresholds are taken from `config`; the structure (span cap,
// width table, schema) is the model's.
inline KnowledgeGraph extract(const std::vector<std::string>& tokens, const SpearModel& model,
                              const ModelConfig& config) {
  const SchemaDef& schema = model.config.schema;
  TokenEmbeddings emb = model.encoder->encode(tokens);
  auto spans = enumerate_spans(static_cast<int>(tokens.size()), model.config.max_span_len);

  std::vector<SpanRepresentation> reps;
  reps.reserve(spans.size());
  for (const auto& s : spans) reps.push_back(span_representation(emb, s, model.width));
  auto entity_probs = classify_entities(reps, model);

  KnowledgeGraph out;
  out.tokens = tokens;
  std::vector<SpanRepresentation> survivors;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    int best = 0;
    entity_probs[i].maxCoeff(&best);
    if (best == model.none_index()) continue;
    out.entities.push_back({spans[i].start, spans[i].end, schema.entity_types[best]});
    survivors.push_back(reps[i]);
  }

  auto attr_probs = classify_attributes(survivors, model);
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    for (std::size_t t = 0; t < schema.attribute_types.size(); ++t) {
      if (attr_probs[i](static_cast<int>(t)) >= config.attribute_threshold)
        out.attributes.push_back({i, schema.attribute_types[t]});
    }
  }

  std::vector<PairRepresentation> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> pair_index;
  for (std::size_t h = 0; h < survivors.size(); ++h) {
    for (std::size_t t = 0; t < survivors.size(); ++t) {
      if (h == t) continue;
      pairs.push_back(
          pair_representation(emb, survivors[h].span(), survivors[t].span(), model.width));
      pair_index.emplace_back(h, t);
    }
  }
  auto rel_probs = classify_relations(pairs, model);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t t = 0; t < schema.relation_types.size(); ++t) {
      if (rel_probs[p](static_cast<int>(t)) >= config.relation_threshold)
        out.relations.push_back({pair_index[p].first, pair_index[p].second,
                                 schema.relation_types[t]});
    }
  }
  return out;
}

inline KnowledgeGraph extract(const std::vector<std::string>& tokens, const SpearModel& model) {
  return extract(tokens, model, model.config);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// A checkpoint is a directory holding model.json: format version, schema
// fingerprint, full config, and all parameter tensors. Loading verifies
// the fingerprint so a checkpoint never silently pairs with a different
// schema.

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("parameter matrix missing or empty");
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols()))
      throw ValidationError("ragged parameter matrix");
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline void save_checkpoint(const SpearModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["schema_fingerprint"] = schema_fingerprint(model.config.schema);
  j["config"] = model.config;
  nlohmann::json params;
  params["width"] = detail::matrix_to_json(model.width.rows);
  params["entity_w"] = detail::matrix_to_json(model.entity_w);
  params["entity_b"] = detail::vector_to_json(model.entity_b);
  params["relation_w"] = detail::matrix_to_json(model.relation_w);
  params["relation_b"] = detail::vector_to_json(model.relation_b);
  params["attribute_w"] = detail::matrix_to_json(model.attribute_w);
  params["attribute_b"] = detail::vector_to_json(model.attribute_b);
  j["params"] = std::move(params);
  std::ofstream out(dir / "model.json", std::ios::binary);
  if (!out) throw Error("cannot write checkpoint to " + (dir / "model.json").string());
  out << j.dump(2) << "\n";
}

inline SpearModel load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json", std::ios::binary);
  if (!in) throw NotFoundError("no checkpoint at " + (dir / "model.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), e.byte);
  }
  if (j.value("format_version", -1) != kCheckpointFormatVersion)
    throw ConfigError("unsupported checkpoint format version");
  SpearModel m;
  m.config = j.at("config").get<ModelConfig>();
  validate_config(m.config);
  std::string recorded = j.value("schema_fingerprint", std::string{});
  if (recorded != schema_fingerprint(m.config.schema))
    throw ConfigError("checkpoint schema fingerprint mismatch: expected " + recorded + ", got " +
                      schema_fingerprint(m.config.schema));
  m.encoder = make_encoder(m.config.encoder);
  const auto& params = j.at("params");
  m.width.rows = detail::matrix_from_json(params.at("width"));
  m.entity_w = detail::matrix_from_json(params.at("entity_w"));
  m.entity_b = detail::vector_from_json(params.at("entity_b"));
  m.relation_w = detail::matrix_from_json(params.at("relation_w"));
  m.relation_b = detail::vector_from_json(params.at("relation_b"));
  m.attribute_w = detail::matrix_from_json(params.at("attribute_w"));
  m.attribute_b = detail::vector_from_json(params.at("attribute_b"));
  if (m.width.rows.rows() != m.config.max_span_len || m.width.dim() != m.config.width_dim ||
      m.entity_w.cols() != m.span_dim() || m.relation_w.cols() != m.pair_dim() ||
      m.attribute_w.cols() != m.span_dim() ||
      m.entity_w.rows() != static_cast<int>(m.config.schema.entity_types.size()) + 1 ||
      m.relation_w.rows() != static_cast<int>(m.config.schema.relation_types.size()) ||
      m.attribute_w.rows() != static_cast<int>(m.config.schema.attribute_types.size()))
    throw ConfigError("checkpoint parameter shapes do not match its config");
  return m;
}

}  // namespace spear
