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
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/evalkit.hpp"
#include "mvcl/matcher.hpp"
#include "mvcl/ranker.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

struct ModelConfig {
  std::size_t max_len = 512;
  EncoderConfig encoder;
  MatchConfig matcher;  // matcher.dim follows encoder.dim
  Temperatures temperatures;
  std::size_t element_budget = 64;  // L1, tokens masked per element-view positive

  void validate() const {
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    encoder.validate();
    matcher.validate();
    if (matcher.dim != encoder.dim) throw ConfigError("matcher.dim must equal encoder.dim");
    temperatures.validate();
  }
};

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once, so results written by index are deterministic.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Encoder + matcher + attention-pool head over one parameter store.
class RetrievalModel {
 public:
  static constexpr std::uint64_t kInitStream = 0x1417;

  RetrievalModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
                 std::shared_ptr<const FixtureTable> fixture = nullptr)
      : config_(std::move(config)), vocab_(std::move(vocab)), fixture_(std::move(fixture)) {
    config_.matcher.dim = config_.encoder.dim;
    config_.validate();
    if (config_.encoder.kind == EncoderKind::fixture) {
      if (!fixture_) throw ConfigError("fixture encoder requires a loaded fixture table");
      if (fixture_->dim() != config_.encoder.dim) {
        throw ConfigError("fixture dimension " + std::to_string(fixture_->dim()) + " does not match encoder.dim " +
                          std::to_string(config_.encoder.dim));
      }
    }
    encoder_ = Encoder(config_.encoder, "encoder");
    matcher_ = Matcher(config_.matcher, "matcher");
    pool_ = AttentionPoolHead(config_.encoder.dim, "pool");
    Rng rng(mix_seed(seed, kInitStream));
    encoder_.register_parameters(params_, vocab_.size(), rng);
    matcher_.register_parameters(params_, rng);
    pool_.register_parameters(params_, rng);
  }

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  const Matcher& matcher() const noexcept { return matcher_; }
  const AttentionPoolHead& pool_head() const noexcept { return pool_; }
  std::shared_ptr<const FixtureTable> fixture() const { return fixture_; }

  /// Token representations of an already truncated token sequence.
  Var encode_tokens(Tape& tape, const std::string& case_id, std::span<const std::string> tokens) const {
    return encoder_.encode(tape, store(), vocab_, tokens, false, fixture_.get(), case_id);
  }

  /// Token representations of a case, keeping its last max_len tokens.
  Var encode(Tape& tape, const CaseDocument& doc) const {
    if (doc.tokens.size() <= config_.max_len) return encode_tokens(tape, doc.id, doc.tokens);
    const auto kept = truncate_front(std::span<const std::string>(doc.tokens), config_.max_len);
    return encode_tokens(tape, doc.id, kept);
  }

  Var pool(Tape& tape, const Var& h, Var* weights = nullptr) const { return pool_.pool(tape, store(), h, weights); }

  Var pair_representation(Tape& tape, const Var& h_q, const Var& h_cand, AttentionRecord* record = nullptr) const {
    return matcher_.pair_representation(tape, store(), h_q, h_cand, record);
  }

  /// Probability (1 x 1) that C is more relevant to the query than B.
  Var predict(Tape& tape, const Var& h_q, const Var& h_b, const Var& h_c) const {
    return matcher_.classify(tape, store(), pair_representation(tape, h_q, h_b), pair_representation(tape, h_q, h_c));
  }

  double probability(const CaseDocument& q, const CaseDocument& b, const CaseDocument& c) const {
    Tape tape(false);
    Var h_q = encode(tape, q);
    return predict(tape, h_q, encode(tape, b), encode(tape, c)).value().item();
  }

 private:
  // A tape with gradients disabled only reads parameter values, so inference
  // can share the store across threads.
  ParameterStore& store() const { return const_cast<ParameterStore&>(params_); }

  ModelConfig config_;
  Vocabulary vocab_;
  std::shared_ptr<const FixtureTable> fixture_;
  ParameterStore params_;
  Encoder encoder_;
  Matcher matcher_;
  AttentionPoolHead pool_;
};

/// Vocabulary over every case in the corpus.
inline Vocabulary corpus_vocabulary(const Corpus& corpus, std::size_t hash_buckets) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.cases.size());
  for (const auto& [id, doc] : corpus.cases) docs.push_back(doc.tokens);
  return Vocabulary::build(docs, hash_buckets);
}

struct TriplePredictions {
  std::vector<double> probabilities;
  std::vector<int> predictions;  // 1 iff probability > 0.5
  std::vector<int> labels;
};

inline TriplePredictions predict_triples(const RetrievalModel& model, const Corpus& corpus,
                                         std::span<const Triple> triples, std::size_t threads = 0) {
  TriplePredictions out;
  out.probabilities.resize(triples.size());
  parallel_for(triples.size(), threads, [&](std::size_t i) {
    const Triple& t = triples[i];
    out.probabilities[i] = model.probability(corpus.at(t.query_id), corpus.at(t.cand_b_id), corpus.at(t.cand_c_id));
  });
  for (std::size_t i = 0; i < triples.size(); ++i) {
    out.predictions.push_back(out.probabilities[i] > 0.5 ? 1 : 0);
    out.labels.push_back(triples[i].label);
  }
  return out;
}

inline MetricsReport evaluate_triples(const RetrievalModel& model, const Corpus& corpus,
                                      std::span<const Triple> triples, std::size_t threads = 0) {
  if (triples.empty()) throw ContractError("evaluate_triples: no triples");
  const TriplePredictions p = predict_triples(model, corpus, triples, threads);
  return macro_metrics(p.predictions, p.labels);
}

/// Preferences among `candidates` for `query`: each unordered pair is scored
/// once as (query, i, j) with i < j, giving p(i, j) = 1 - y_hat.
inline PreferenceSet prefs_from_model(const RetrievalModel& model, const Corpus& corpus, const std::string& query,
                                      std::vector<std::string> candidates, std::size_t threads = 0) {
  if (std::find(candidates.begin(), candidates.end(), query) != candidates.end()) {
    throw ContractError("query '" + query + "' cannot also be a candidate");
  }
  PreferenceSet prefs(std::move(candidates));
  const auto& ids = prefs.candidates();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> y_hat(pairs.size());
  const CaseDocument& q = corpus.at(query);
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    y_hat[k] = model.probability(q, corpus.at(ids[pairs[k].first]), corpus.at(ids[pairs[k].second]));
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) prefs.set(ids[pairs[k].first], ids[pairs[k].second], 1.0 - y_hat[k]);
  return prefs;
}

}  // namespace mvcl
