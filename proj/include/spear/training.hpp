#pragma once
// Supervised training for the joint model.
//
// Each sentence becomes one batch: gold entity spans plus sampled
// non-entity spans for the entity head, gold entities (with multi-hot
// targets) for the attribute head, and gold entity pairs, grouped and
// multi-hot, plus sampled unrelated pairs for the relation head. The
// relation and attribute heads train on gold spans only, so their inputs
// stay clean regardless of how the entity head is doing.
//
// The encoder is frozen; trainable state is the three linear heads and the
// width embedding table. Gradients are analytic, one Adam step per
// sentence.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spear/corpus.hpp"
#include "spear/encoder.hpp"
#include "spear/errors.hpp"
#include "spear/model.hpp"
#include "spear/rng.hpp"
#include "spear/schema.hpp"

namespace spear {

struct EntitySample {
  TokenSpan span;
  int label;  // index into entity types; the none class is the last index
};

struct RelationSample {
  TokenSpan head;
  TokenSpan tail;
  Eigen::VectorXd targets;  // multi-hot over relation types
};

struct AttributeSample {
  TokenSpan span;
  Eigen::VectorXd targets;  // multi-hot over attribute types
};

struct SentenceBatch {
  std::vector<EntitySample> entities;
  std::vector<RelationSample> relations;
  std::vector<AttributeSample> attributes;
};

// Training material for one sentence. Negatives are drawn fresh from `rng`
// on every call, so revisiting a sentence across epochs sees different
// negatives. Gold spans longer than the span cap cannot be represented and
// are dropped, together with any relation touching them.
inline SentenceBatch build_sentence_batch(const AnnotatedSentence& sentence,
                                          const ModelConfig& config, Rng& rng) {
  const SchemaDef& schema = config.schema;
  const int none_label = static_cast<int>(schema.entity_types.size());
  const int n_rel = static_cast<int>(schema.relation_types.size());
  const int n_attr = static_cast<int>(schema.attribute_types.size());

  std::vector<bool> usable(sentence.entities.size(), false);
  for (std::size_t i = 0; i < sentence.entities.size(); ++i)
    usable[i] = sentence.entities[i].span().length() <= config.max_span_len;

  SentenceBatch batch;
  for (std::size_t i = 0; i < sentence.entities.size(); ++i) {
    if (!usable[i]) continue;
    int label = schema.entity_index(sentence.entities[i].type);
    if (label < 0)
      throw ValidationError("entity type not in schema: " + sentence.entities[i].type);
    batch.entities.push_back({sentence.entities[i].span(), label});
  }
  for (const auto& span : sample_negative_entities(sentence, config.negative_entities,
                                                   config.max_span_len, rng))
    batch.entities.push_back({span, none_label});

  std::vector<Eigen::VectorXd> attr_targets(sentence.entities.size(),
                                            Eigen::VectorXd::Zero(n_attr));
  for (const auto& a : sentence.attributes) {
    int t = schema.attribute_index(a.type);
    if (t < 0) throw ValidationError("attribute type not in schema: " + a.type);
    attr_targets[a.entity](t) = 1.0;
  }
  for (std::size_t i = 0; i < sentence.entities.size(); ++i) {
    if (!usable[i]) continue;
    batch.attributes.push_back({sentence.entities[i].span(), attr_targets[i]});
  }

  std::map<std::pair<std::size_t, std::size_t>, Eigen::VectorXd> pair_targets;
  for (const auto& r : sentence.relations) {
    if (!usable[r.head] || !usable[r.tail]) continue;
    int t = schema.relation_index(r.type);
    if (t < 0) throw ValidationError("relation type not in schema: " + r.type);
    auto [it, fresh] = pair_targets.try_emplace(std::make_pair(r.head, r.tail),
                                                Eigen::VectorXd::Zero(n_rel));
    it->second(t) = 1.0;
  }
  for (const auto& [pair, targets] : pair_targets)
    batch.relations.push_back({sentence.entities[pair.first].span(),
                               sentence.entities[pair.second].span(), targets});
  for (const auto& [h, t] : sample_negative_relations(sentence.entities, sentence.relations,
                                                      config.negative_relations, rng)) {
    if (!usable[h] || !usable[t]) continue;
    batch.relations.push_back({sentence.entities[h].span(), sentence.entities[t].span(),
                               Eigen::VectorXd::Zero(n_rel)});
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Loss and analytic gradients

// Gradient accumulators, shaped like the trainable tensors.
struct Gradients {
  Eigen::MatrixXd width;
  Eigen::MatrixXd entity_w;
  Eigen::VectorXd entity_b;
  Eigen::MatrixXd relation_w;
  Eigen::VectorXd relation_b;
  Eigen::MatrixXd attribute_w;
  Eigen::VectorXd attribute_b;

  static Gradients like(const SpearModel& m) {
    Gradients g;
    g.width = Eigen::MatrixXd::Zero(m.width.rows.rows(), m.width.rows.cols());
    g.entity_w = Eigen::MatrixXd::Zero(m.entity_w.rows(), m.entity_w.cols());
    g.entity_b = Eigen::VectorXd::Zero(m.entity_b.size());
    g.relation_w = Eigen::MatrixXd::Zero(m.relation_w.rows(), m.relation_w.cols());
    g.relation_b = Eigen::VectorXd::Zero(m.relation_b.size());
    g.attribute_w = Eigen::MatrixXd::Zero(m.attribute_w.rows(), m.attribute_w.cols());
    g.attribute_b = Eigen::VectorXd::Zero(m.attribute_b.size());
    return g;
  }

  void zero() {
    width.setZero();
    entity_w.setZero();
    entity_b.setZero();
    relation_w.setZero();
    relation_b.setZero();
    attribute_w.setZero();
    attribute_b.setZero();
  }
};

// Same order as parameter_views, so optimizer updates can be paired up by
// position.
inline std::vector<ParamView> gradient_views(Gradients& g) {
  std::vector<ParamView> out;
  detail::collect_views(out, "width", g.width);
  detail::collect_views(out, "entity_w", g.entity_w);
  detail::collect_views(out, "entity_b", g.entity_b);
  detail::collect_views(out, "relation_w", g.relation_w);
  detail::collect_views(out, "relation_b", g.relation_b);
  detail::collect_views(out, "attribute_w", g.attribute_w);
  detail::collect_views(out, "attribute_b", g.attribute_b);
  return out;
}

namespace detail {

// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Summed binary cross-entropy over independent logits; fills dz with the
// gradient (sigmoid(z) - target) when asked.
inline double bce_with_logits(const Eigen::VectorXd& z, const Eigen::VectorXd& targets,
                              Eigen::VectorXd* dz) {
  double loss = 0.0;
  if (dz) dz->resize(z.size());
  for (int i = 0; i < z.size(); ++i) {
    loss += softplus(z(i)) - z(i) * targets(i);
    if (dz) (*dz)(i) = sigmoid(z(i)) - targets(i);
  }
  return loss;
}

}  // namespace detail

// Joint loss for one sentence:
//
//     mean-over-spans cross-entropy        (entity head)
//   + mean-over-pairs summed BCE           (relation head)
//   + mean-over-gold-entities summed BCE   (attribute head)
//
// A head with no samples contributes zero. When `grads` is non-null the
// parameter gradients are accumulated into it (callers zero it first).
// The encoder is frozen, so the only gradient flowing into the inputs is
// the width-embedding part of each representation.
inline double loss_and_gradients(const SpearModel& model, const TokenEmbeddings& emb,
                                 const SentenceBatch& batch, Gradients* grads) {
  const int d = emb.dim();
  const int dw = model.width.dim();
  double loss = 0.0;

  if (!batch.entities.empty()) {
    const double norm = 1.0 / static_cast<double>(batch.entities.size());
    for (const auto& s : batch.entities) {
      Eigen::VectorXd x = span_representation(emb, s.span, model.width).vec;
      Eigen::VectorXd z = model.entity_w * x + model.entity_b;
      double zmax = z.maxCoeff();
      double lse = zmax + std::log((z.array() - zmax).exp().sum());
      loss += norm * (lse - z(s.label));
      if (grads) {
        Eigen::VectorXd dz = softmax(z);
        dz(s.label) -= 1.0;
        dz *= norm;
        grads->entity_w.noalias() += dz * x.transpose();
        grads->entity_b += dz;
        Eigen::VectorXd dx = model.entity_w.transpose() * dz;
        grads->width.row(s.span.length() - 1) += dx.tail(dw).transpose();
      }
    }
  }

  if (!batch.relations.empty()) {
    const double norm = 1.0 / static_cast<double>(batch.relations.size());
    for (const auto& s : batch.relations) {
      Eigen::VectorXd x = pair_representation(emb, s.head, s.tail, model.width).vec;
      Eigen::VectorXd z = model.relation_w * x + model.relation_b;
      Eigen::VectorXd dz;
      loss += norm * detail::bce_with_logits(z, s.targets, grads ? &dz : nullptr);
      if (grads) {
        dz *= norm;
        grads->relation_w.noalias() += dz * x.transpose();
        grads->relation_b += dz;
        Eigen::VectorXd dx = model.relation_w.transpose() * dz;
        grads->width.row(s.head.length() - 1) += dx.segment(3 * d, dw).transpose();
        grads->width.row(s.tail.length() - 1) += dx.tail(dw).transpose();
      }
    }
  }

  if (!batch.attributes.empty()) {
    const double norm = 1.0 / static_cast<double>(batch.attributes.size());
    for (const auto& s : batch.attributes) {
      Eigen::VectorXd x = span_representation(emb, s.span, model.width).vec;
      Eigen::VectorXd z = model.attribute_w * x + model.attribute_b;
      Eigen::VectorXd dz;
      loss += norm * detail::bce_with_logits(z, s.targets, grads ? &dz : nullptr);
      if (grads) {
        dz *= norm;
        grads->attribute_w.noalias() += dz * x.transpose();
        grads->attribute_b += dz;
        Eigen::VectorXd dx = model.attribute_w.transpose() * dz;
        grads->width.row(s.span.length() - 1) += dx.tail(dw).transpose();
      }
    }
  }

  return loss;
}

// Loss only; the reference path for finite-difference checks.
inline double batch_loss(const SpearModel& model, const TokenEmbeddings& emb,
                         const SentenceBatch& batch) {
  return loss_and_gradients(model, emb, batch, nullptr);
}

// ---------------------------------------------------------------------------
// Optimizer

// Adam over flat parameter views. Moment buffers are addressed by view
// position, so the same view order must be used on every step.
struct AdamState {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;

  AdamState(const std::vector<ParamView>& views, double learning_rate) : lr(learning_rate) {
    for (const auto& view : views) {
      m.push_back(Eigen::VectorXd::Zero(view.size));
      v.push_back(Eigen::VectorXd::Zero(view.size));
    }
  }

  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
      throw ContractViolation("optimizer state does not match the parameter views");
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].size != grads[i].size)
        throw ContractViolation("gradient shape mismatch for " + params[i].name);
      Eigen::Map<Eigen::VectorXd> p(params[i].data, params[i].size);
      Eigen::Map<const Eigen::VectorXd> g(grads[i].data, grads[i].size);
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i].array().matrix() + (1.0 - beta2) * g.array().square().matrix();
      Eigen::ArrayXd m_hat = m[i].array() / c1;
      Eigen::ArrayXd v_hat = v[i].array() / c2;
      p.array() -= lr * m_hat / (v_hat.sqrt() + eps);
    }
  }
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainResult {
  SpearModel model;
  std::vector<double> epoch_losses;  // mean per-sentence loss, one per epoch
};

// Trains a fresh model on the corpus. Deterministic for a fixed config:
// the same seed drives initialization, sentence order, and negative
// sampling. Sentences are validated against the schema up front, and all
// are encoded once before the first epoch. Pass a stream to get one
// progress line per epoch.
inline TrainResult train(const std::vector<AnnotatedSentence>& corpus, const ModelConfig& config,
                         std::ostream* log = nullptr) {
  validate_config(config);
  if (corpus.empty()) throw EmptyCorpusError("cannot train on an empty corpus");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto report = validate_graph(corpus[i], config.schema);
    if (!report.ok())
      throw ValidationError("sentence " + std::to_string(i) + ": " +
                                report.violations.front().message,
                            i);
  }

  auto encoder = make_encoder(config.encoder);
  std::vector<TokenEmbeddings> encoded;
  encoded.reserve(corpus.size());
  for (const auto& s : corpus) encoded.push_back(encoder->encode(s.tokens));

  SpearModel model = init_model(config, encoder);
  auto params = parameter_views(model);
  Gradients grads = Gradients::like(model);
  auto grad_views = gradient_views(grads);
  AdamState adam(params, config.learning_rate);

  Rng rng(mix_seeds(config.seed, fnv1a("train")));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      SentenceBatch batch = build_sentence_batch(corpus[idx], config, rng);
      grads.zero();
      total += loss_and_gradients(model, encoded[idx], batch, &grads);
      adam.step(params, grad_views);
    }
    result.epoch_losses.push_back(total / static_cast<double>(corpus.size()));
    if (log)
      *log << "epoch " << epoch << "/" << config.epochs << "  loss " << std::fixed
           << std::setprecision(6) << result.epoch_losses.back() << "\n";
  }
  result.model = std::move(model);
  return result;
}

}  // namespace spear
