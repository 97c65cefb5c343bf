#pragma once
// Contextual text encoders behind a stable interface, plus the span
// representation math built on top of them.
//
// A span is represented as  maxpool(e_start..e_end) (+) e_seq (+) w_len :
// the elementwise max over the span's token vectors, the whole-sequence
// summary vector, and a learned width embedding for the span's length,
// concatenated in that fixed order.
//
// Two encoders ship with the library:
//   hash  - deterministic pseudo-random vectors derived from token
//           identity, neighboring tokens, and position; no downloads, no
//           trainable state. The default, and the one used in tests.
//   file  - precomputed per-sentence embeddings loaded from JSON, for
//           plugging in vectors produced offline by a real transformer.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spear/errors.hpp"
#include "spear/rng.hpp"
#include "spear/schema.hpp"

namespace spear {

// Per-word contextual vectors for one sentence. Column i of `tokens` is
// the vector for word i; `sequence` is the whole-passage summary vector.
struct TokenEmbeddings {
  Eigen::MatrixXd tokens;    // dim x count
  Eigen::VectorXd sequence;  // dim

  int dim() const { return static_cast<int>(tokens.rows()); }
  int count() const { return static_cast<int>(tokens.cols()); }
};

class Encoder {
public:
  virtual ~Encoder() = default;
  virtual TokenEmbeddings encode(const std::vector<std::string>& tokens) const = 0;
  virtual int dim() const = 0;
  // Maximum sequence length, counted in sub-word pieces.
  virtual int max_subwords() const = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Pooling and span representations

// Elementwise maximum over a non-empty set of column vectors.
inline Eigen::VectorXd maxpool(const Eigen::Ref<const Eigen::MatrixXd>& columns) {
  if (columns.cols() == 0) throw EmptyPoolError("maxpool over an empty set of vectors");
  return columns.rowwise().maxCoeff();
}

inline Eigen::VectorXd maxpool(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) throw EmptyPoolError("maxpool over an empty set of vectors");
  Eigen::VectorXd out = vectors.front();
  for (std::size_t i = 1; i < vectors.size(); ++i) out = out.cwiseMax(vectors[i]);
  return out;
}

// Learned width embeddings: one trainable row per span length 1..max_len.
struct WidthEmbeddingTable {
  Eigen::MatrixXd rows;  // max_length x dim; row l-1 holds w_l

  int max_length() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }

  Eigen::VectorXd for_length(int length) const {
    if (length < 1 || length > max_length())
      throw IndexError("no width embedding for span length " + std::to_string(length));
    return rows.row(length - 1).transpose();
  }

  static WidthEmbeddingTable init(int max_length, int dim, Rng& rng) {
    WidthEmbeddingTable t;
    t.rows.resize(max_length, dim);
    for (int r = 0; r < max_length; ++r)
      for (int c = 0; c < dim; ++c) t.rows(r, c) = 0.02 * rng.normal();
    return t;
  }
};

struct SpanRepresentation {
  Eigen::VectorXd vec;  // pooled-span (+) sequence (+) width, in that order
  int start = 0;
  int end = 0;
  TokenSpan span() const { return {start, end}; }
};

inline SpanRepresentation span_representation(const TokenEmbeddings& emb, TokenSpan span,
                                              const WidthEmbeddingTable& widths) {
  if (span.start < 0 || span.start > span.end || span.end >= emb.count())
    throw IndexError("span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                     "] out of range for " + std::to_string(emb.count()) + " tokens");
  const int len = span.length();
  if (len > widths.max_length())
    throw IndexError("span length " + std::to_string(len) + " exceeds the width table (" +
                     std::to_string(widths.max_length()) + ")");
  const int d = emb.dim();
  SpanRepresentation rep;
  rep.start = span.start;
  rep.end = span.end;
  rep.vec.resize(2 * d + widths.dim());
  rep.vec.head(d) = maxpool(emb.tokens.middleCols(span.start, len));
  rep.vec.segment(d, d) = emb.sequence;
  rep.vec.tail(widths.dim()) = widths.for_length(len);
  return rep;
}

// Maxpool over the tokens strictly between two entity spans; the all-zeros
// vector when the gap is empty (adjacent or overlapping entities). The gap
// is symmetric in its arguments.
inline Eigen::VectorXd between_context(const TokenEmbeddings& emb, TokenSpan a, TokenSpan b) {
  if (a.start < 0 || a.end >= emb.count() || b.start < 0 || b.end >= emb.count() ||
      a.start > a.end || b.start > b.end)
    throw IndexError("between_context spans out of range");
  int lo = std::min(a.end, b.end) + 1;
  int hi = std::max(a.start, b.start) - 1;
  if (lo > hi) return Eigen::VectorXd::Zero(emb.dim());
  return maxpool(emb.tokens.middleCols(lo, hi - lo + 1));
}

// ---------------------------------------------------------------------------
// Hash encoder

struct HashEncoderConfig {
  int dim = 64;
  int max_subwords = 512;
  std::uint64_t seed = 0x5eedULL;
  int piece_chars = 6;             // words are chunked into pieces this long
  double neighbor_weight = 0.35;   // context mixing strength
  double position_weight = 0.15;
};

// Deterministic stand-in for a pretrained contextual encoder. A token's
// vector is dominated by its identity component, perturbed by its
// neighbors and position, so the same word in different contexts gets
// different (but correlated) vectors. Words are chunked into fixed-size
// pieces which are pooled by elementwise max, mirroring how sub-word
// vectors are pooled to word level.
class HashEncoder : public Encoder {
public:
  explicit HashEncoder(HashEncoderConfig config = {}) : config_(config) {
    if (config_.dim < 1 || config_.max_subwords < 3 || config_.piece_chars < 1)
      throw ConfigError("invalid hash encoder configuration");
  }

  TokenEmbeddings encode(const std::vector<std::string>& tokens) const override {
    if (tokens.empty()) throw ContractViolation("encode requires at least one token");
    std::size_t pieces = subword_count(tokens);
    if (pieces > static_cast<std::size_t>(config_.max_subwords))
      throw InputTooLongError("input expands to " + std::to_string(pieces) +
                                  " sub-words, limit is " + std::to_string(config_.max_subwords),
                              pieces);
    TokenEmbeddings emb;
    emb.tokens.resize(config_.dim, static_cast<int>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      Eigen::VectorXd context = Eigen::VectorXd::Zero(config_.dim);
      if (i > 0) context += config_.neighbor_weight * unit_vector("prev", tokens[i - 1]);
      if (i + 1 < tokens.size())
        context += config_.neighbor_weight * unit_vector("next", tokens[i + 1]);
      context += config_.position_weight * unit_vector("pos", std::to_string(i));

      Eigen::VectorXd word;
      bool first = true;
      for (const auto& piece : pieces_of(tokens[i])) {
        Eigen::VectorXd v = unit_vector("tok", piece) + context;
        word = first ? v : word.cwiseMax(v).eval();
        first = false;
      }
      emb.tokens.col(static_cast<int>(i)) = word;
    }
    std::string joined;
    for (const auto& t : tokens) {
      joined += t;
      joined += '\x1f';
    }
    emb.sequence = unit_vector("seq", joined);
    return emb;
  }

  int dim() const override { return config_.dim; }
  int max_subwords() const override { return config_.max_subwords; }
  std::string name() const override { return "hash"; }

  // Pieces for the whole input, plus the two sequence delimiters.
  std::size_t subword_count(const std::vector<std::string>& tokens) const {
    std::size_t total = 2;
    for (const auto& t : tokens) total += pieces_of(t).size();
    return total;
  }

private:
  std::vector<std::string> pieces_of(const std::string& word) const {
    std::vector<std::string> pieces;
    if (word.empty()) {
      pieces.push_back("");
      return pieces;
    }
    for (std::size_t at = 0; at < word.size(); at += config_.piece_chars)
      pieces.push_back(word.substr(at, config_.piece_chars));
    return pieces;
  }

  // Pseudo-random vector with expected unit norm, keyed by (tag, payload).
  Eigen::VectorXd unit_vector(std::string_view tag, std::string_view payload) const {
    Rng rng(mix_seeds(config_.seed, mix_seeds(fnv1a(tag), fnv1a(payload))));
    Eigen::VectorXd v(config_.dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));
    for (int i = 0; i < config_.dim; ++i) v(i) = scale * rng.normal();
    return v;
  }

  HashEncoderConfig config_;
};

// ---------------------------------------------------------------------------
// File encoder
//
// JSON layout:
//   { "dim": int, "max_subwords": int,
//     "sentences": [ {"tokens": [str], "cls": [num], "vectors": [[num]]} ] }

class FileEncoder : public Encoder {
public:
  explicit FileEncoder(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open embedding file: " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("embedding file is not valid JSON: ") + e.what(), e.byte);
    }
    dim_ = j.value("dim", 0);
    max_subwords_ = j.value("max_subwords", 512);
    if (dim_ < 1) throw ValidationError("embedding file missing a positive \"dim\"");
    if (!j.contains("sentences") || !j["sentences"].is_array())
      throw ValidationError("embedding file missing \"sentences\" array");
    for (const auto& s : j["sentences"]) {
      auto tokens = s.value("tokens", std::vector<std::string>{});
      if (tokens.empty()) throw ValidationError("embedding entry has no tokens");
      TokenEmbeddings emb;
      auto cls = s.value("cls", std::vector<double>{});
      auto vectors = s.value("vectors", std::vector<std::vector<double>>{});
      if (static_cast<int>(cls.size()) != dim_ || vectors.size() != tokens.size())
        throw ValidationError("embedding entry has inconsistent shapes");
      emb.sequence = Eigen::Map<const Eigen::VectorXd>(cls.data(), dim_);
      emb.tokens.resize(dim_, static_cast<int>(tokens.size()));
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (static_cast<int>(vectors[i].size()) != dim_)
          throw ValidationError("embedding entry has inconsistent shapes");
        emb.tokens.col(static_cast<int>(i)) =
            Eigen::Map<const Eigen::VectorXd>(vectors[i].data(), dim_);
      }
      table_[key_of(tokens)] = std::move(emb);
    }
  }

  TokenEmbeddings encode(const std::vector<std::string>& tokens) const override {
    if (tokens.empty()) throw ContractViolation("encode requires at least one token");
    if (tokens.size() + 2 > static_cast<std::size_t>(max_subwords_))
      throw InputTooLongError("input of " + std::to_string(tokens.size() + 2) +
                                  " sub-words exceeds limit " + std::to_string(max_subwords_),
                              tokens.size() + 2);
    auto it = table_.find(key_of(tokens));
    if (it == table_.end())
      throw NotFoundError("sentence not present in embedding file " + path_);
    return it->second;
  }

  int dim() const override { return dim_; }
  int max_subwords() const override { return max_subwords_; }
  std::string name() const override { return "file:" + path_; }

private:
  static std::string key_of(const std::vector<std::string>& tokens) {
    std::string key;
    for (const auto& t : tokens) {
      key += t;
      key += '\x1f';
    }
    return key;
  }

  std::string path_;
  int dim_ = 0;
  int max_subwords_ = 512;
  std::map<std::string, TokenEmbeddings> table_;
};

// ---------------------------------------------------------------------------
// Selection by name/path

struct EncoderConfig {
  std::string kind = "hash";  // "hash" or "file"
  std::string path;           // embedding file for kind "file"
  int dim = 64;
  int max_subwords = 512;
  std::uint64_t seed = 0x5eedULL;
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"kind", c.kind}, {"path", c.path}, {"dim", c.dim},
       {"max_subwords", c.max_subwords}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c = EncoderConfig{};
  c.kind = j.value("kind", std::string("hash"));
  c.path = j.value("path", std::string{});
  c.dim = j.value("dim", 64);
  c.max_subwords = j.value("max_subwords", 512);
  c.seed = j.value("seed", std::uint64_t{0x5eedULL});
}

inline std::shared_ptr<Encoder> make_encoder(const EncoderConfig& config) {
  if (config.kind == "hash") {
    HashEncoderConfig hc;
    hc.dim = config.dim;
    hc.max_subwords = config.max_subwords;
    hc.seed = config.seed;
    return std::make_shared<HashEncoder>(hc);
  }
  if (config.kind == "file") {
    if (config.path.empty()) throw ConfigError("encoder kind \"file\" requires a path");
    return std::make_shared<FileEncoder>(config.path);
  }
  throw ConfigError("unknown encoder kind: " + config.kind +
                    " (this build provides \"hash\" and \"file\")");
}

}  // namespace spear
