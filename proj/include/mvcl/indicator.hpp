// Copyright 2026 The MVCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvcl/autodiff/adam.hpp"
#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/evalkit.hpp"
#include "mvcl/model.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

enum class Pooling { cls_token, last_token, attention_pool };

inline std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::cls_token: return "cls_token";
    case Pooling::last_token: return "last_token";
    case Pooling::attention_pool: return "attention_pool";
  }
  return "?";
}

inline Pooling parse_pooling(std::string_view name) {
  if (name == "cls_token") return Pooling::cls_token;
  if (name == "last_token") return Pooling::last_token;
  if (name == "attention_pool") return Pooling::attention_pool;
  throw ConfigError("unknown pooling '" + std::string(name) + "' (expected cls_token|last_token|attention_pool)");
}

struct IndicatorConfig {
  EncoderConfig encoder{EncoderKind::lookup_recurrent, 16, 0, 8, {}};
  Pooling pooling = Pooling::attention_pool;
  std::size_t max_len = 512;
  std::size_t steps = 500;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  std::size_t eval_every = 25;
  double held_out_fraction = 0.2;
  AdamConfig adam;

  void validate() const {
    encoder.validate();
    if (encoder.kind == EncoderKind::fixture) throw ConfigError("the indicator needs a token encoder (lookup kinds)");
    if (max_len < 1 || batch_size < 1) throw ConfigError("indicator max_len and batch_size must be >= 1");
    if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0)) {
      throw ConfigError("indicator.held_out_fraction must be in [0, 1)");
    }
    if (!(learning_rate >= 0.0)) throw ConfigError("indicator.learning_rate must be >= 0");
  }
};

struct IndicatorPrediction {
  int label = 0;
  double probability = 0.5;  // of class 1
};

/// Binary sentence classifier: own encoder, pooling, affine + softmax head.
class IndicatorModel {
 public:
  static constexpr std::uint64_t kInitStream = 0x1d1c;

  IndicatorModel(IndicatorConfig config, Vocabulary vocab, std::uint64_t seed)
      : config_(std::move(config)), vocab_(std::move(vocab)) {
    config_.validate();
    encoder_ = Encoder(config_.encoder, "indicator.encoder");
    pool_ = AttentionPoolHead(config_.encoder.dim, "indicator.pool");
    Rng rng(mix_seed(seed, kInitStream));
    encoder_.register_parameters(params_, vocab_.size(), rng);
    if (config_.pooling == Pooling::attention_pool) pool_.register_parameters(params_, rng);
    params_.add_zeros("indicator.head.w", {config_.encoder.dim, 2});
    params_.add_zeros("indicator.head.b", {1, 2});
  }

  const IndicatorConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  /// 1 x 2 class distribution for one sentence (front-truncated to max_len).
  Var distribution(Tape& tape, std::span<const std::string> tokens) const {
    if (tokens.empty()) throw EmptyDocument("cannot classify an empty sentence");
    std::vector<std::string> kept;
    if (tokens.size() > config_.max_len) {
      kept = truncate_front(tokens, config_.max_len);
      tokens = kept;
    }
    ParameterStore& store = const_cast<ParameterStore&>(params_);
    const bool cls = config_.pooling == Pooling::cls_token;
    Var h = encoder_.encode(tape, store, vocab_, tokens, cls);
    Var pooled;
    switch (config_.pooling) {
      case Pooling::cls_token: pooled = slice(h, 0, 0, 1); break;
      case Pooling::last_token: pooled = slice(h, 0, h.rows() - 1, h.rows()); break;
      case Pooling::attention_pool: pooled = pool_.pool(tape, store, h); break;
    }
    Var logits = affine(pooled, tape.parameter(store, "indicator.head.w"), tape.parameter(store, "indicator.head.b"));
    return softmax(logits, 1);
  }

  /// Argmax prediction; an exact 0.5 goes to class 0.
  IndicatorPrediction predict(std::span<const std::string> tokens) const {
    Tape tape(false);
    const Tensor d = distribution(tape, tokens).value();
    return {d[1] > d[0] ? 1 : 0, d[1]};
  }

  std::vector<IndicatorPrediction> predict_all(std::span<const std::vector<std::string>> sentences,
                                               std::size_t threads = 0) const {
    std::vector<IndicatorPrediction> out(sentences.size());
    parallel_for(sentences.size(), threads, [&](std::size_t i) { out[i] = predict(sentences[i]); });
    return out;
  }

 private:
  IndicatorConfig config_;
  Vocabulary vocab_;
  ParameterStore params_;
  Encoder encoder_;
  AttentionPoolHead pool_;
};

struct IndicatorTrainingLog {
  std::vector<double> losses;
  std::vector<std::pair<std::size_t, double>> held_out_f1;  // (step, F1 of class 1)
  std::size_t best_step = 0;
  double best_f1 = 0.0;
};

/// Stratified split: per class, a seeded `fraction` of the examples (at least
/// one, never all) is held out.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const SentenceExample> examples, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> train, held;
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].label == label) idx.push_back(i);
    }
    Rng rng(mix_seed(seed, 0x5a17, static_cast<std::uint64_t>(label)));
    rng.shuffle(idx);
    std::size_t take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    if (fraction > 0.0 && idx.size() > 1) take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    else take = 0;
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());
  return {train, held};
}

inline double indicator_f1(const IndicatorModel& model, std::span<const SentenceExample> examples,
                           std::span<const std::size_t> indices) {
  std::vector<int> predictions, labels;
  for (std::size_t i : indices) {
    predictions.push_back(model.predict(examples[i].tokens).label);
    labels.push_back(examples[i].label);
  }
  return positive_f1(predictions, labels);
}

/// Mini-batch cross-entropy training with a fixed step budget; returns the
/// parameters with the best held-out F1 (evaluated every eval_every steps).
inline IndicatorModel train_indicator(std::span<const SentenceExample> examples, const IndicatorConfig& config,
                                      std::uint64_t seed, IndicatorTrainingLog* log = nullptr) {
  config.validate();
  bool has[2] = {false, false};
  for (const auto& ex : examples) {
    if (ex.label != 0 && ex.label != 1) throw IntegrityError("sentence labels must be 0 or 1");
    if (ex.tokens.empty()) throw EmptyDocument("sentence example has no tokens");
    has[ex.label] = true;
  }
  if (!has[0] || !has[1]) throw DegenerateDataset("indicator training needs examples of both classes");

  std::vector<std::vector<std::string>> docs;
  for (const auto& ex : examples) docs.push_back(ex.tokens);
  IndicatorModel model(config, Vocabulary::build(docs, config.encoder.hash_buckets), seed);

  auto [train, held] = stratified_split(examples, config.held_out_fraction, seed);
  const std::vector<std::size_t>& scored = held.empty() ? train : held;

  IndicatorTrainingLog local;
  IndicatorTrainingLog& out = log != nullptr ? *log : local;
  ParameterStore best = model.params();
  out.best_f1 = indicator_f1(model, examples, scored);
  out.best_step = 0;
  out.held_out_f1.emplace_back(0, out.best_f1);

  const std::size_t n = train.size();
  const std::size_t b = std::min(config.batch_size, n);
  std::vector<std::size_t> order;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  for (std::size_t s = 0; s < config.steps; ++s) {
    Tape tape;
    std::vector<Var> terms;
    for (std::size_t k = 0; k < b; ++k) {
      const std::size_t g = s * b + k;
      if (g / n != order_epoch) {
        order = train;
        Rng rng(mix_seed(seed, 0xba7c, g / n));
        rng.shuffle(order);
        order_epoch = g / n;
      }
      const SentenceExample& ex = examples[order[g % n]];
      Var p = clamp(slice(model.distribution(tape, ex.tokens), 1, static_cast<std::size_t>(ex.label),
                          static_cast<std::size_t>(ex.label) + 1),
                    1e-12, 1.0);
      terms.push_back(scale(mvcl::log(p), -1.0));
    }
    Var loss = mean(concat(terms, 1));
    out.losses.push_back(loss.value().item());
    tape.backward(loss);
    adam_step(model.params(), config.learning_rate, config.adam);

    const bool due = config.eval_every > 0 && (s + 1) % config.eval_every == 0;
    if (due || s + 1 == config.steps) {
      const double f1 = indicator_f1(model, examples, scored);
      out.held_out_f1.emplace_back(s + 1, f1);
      if (f1 > out.best_f1) {
        out.best_f1 = f1;
        out.best_step = s + 1;
        best = model.params();
      }
    }
  }
  for (auto& [name, p] : model.params()) p.value = best.at(name).value;
  return model;
}

/// One flag per sentence of every case, from the indicator's predictions.
inline std::map<std::string, ElementAnnotation> annotate_corpus(const std::map<std::string, CaseDocument>& cases,
                                                                const IndicatorModel& model,
                                                                std::size_t threads = 0) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::pair<std::string, std::size_t>> owners;
  for (const auto& [id, doc] : cases) {
    for (std::size_t s = 0; s < doc.sentence_count(); ++s) {
      auto span = doc.sentence_tokens(s);
      sentences.emplace_back(span.begin(), span.end());
      owners.emplace_back(id, s);
    }
  }
  const auto predictions = model.predict_all(sentences, threads);
  std::map<std::string, ElementAnnotation> out;
  for (const auto& [id, doc] : cases) out[id] = {id, std::vector<bool>(doc.sentence_count(), false)};
  for (std::size_t i = 0; i < owners.size(); ++i) {
    out[owners[i].first].flags[owners[i].second] = predictions[i].label == 1;
  }
  return out;
}

}  // namespace mvcl
