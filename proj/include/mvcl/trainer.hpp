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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvcl/autodiff/adam.hpp"
#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/evalkit.hpp"
#include "mvcl/matcher.hpp"
#include "mvcl/model.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t steps = 500;
  double warmup_fraction = 0.1;
  std::size_t eval_every = 50;
  double lambda_case = 0.01;
  double lambda_element = 0.01;
  bool use_case_view = true;
  bool use_element_view = true;
  bool augment_swap = true;
  std::size_t threads = 0;  // evaluation workers; 0 = hardware concurrency
  AdamConfig adam;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (use_element_view && batch_size < 2) {
      throw ConfigError("train.batch_size must be >= 2 when the element view is enabled");
    }
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("train.warmup_fraction must be in [0, 1)");
    if (!(lambda_case >= 0.0) || !(lambda_element >= 0.0)) throw ConfigError("train lambdas must be >= 0");
  }
};

/// L + lambda_case * L_case + lambda_element * L_element.
inline double total_loss(double main, double case_view, double element_view, double lambda_case,
                         double lambda_element) {
  return main + lambda_case * case_view + lambda_element * element_view;
}

inline Var total_loss(const Var& main, const std::optional<Var>& case_view, const std::optional<Var>& element_view,
                      double lambda_case, double lambda_element) {
  Var out = main;
  if (case_view) out = add(out, scale(*case_view, lambda_case));
  if (element_view) out = add(out, scale(*element_view, lambda_element));
  return out;
}

inline std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction) {
  return static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps) + 1e-9));
}

/// Linear ramp 0 -> base over the warmup steps, then linear decay to 0 at total.
inline double lr_at(std::size_t step, std::size_t total_steps, double warmup_fraction, double base_lr) {
  if (step > total_steps) throw ContractError("lr_at: step exceeds total_steps");
  const std::size_t warmup = warmup_steps(total_steps, warmup_fraction);
  if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps == warmup) return base_lr;
  return base_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

struct StepRecord {
  std::size_t step = 0;  // 1-based index of the completed update
  double learning_rate = 0.0;
  double total = 0.0;
  double main = 0.0;
  double case_view = 0.0;
  double element_view = 0.0;
  std::size_t degenerate_positives = 0;

  json to_json() const {
    return {{"step", step},       {"lr", learning_rate},          {"total", total},
            {"main", main},       {"case_view", case_view},       {"element_view", element_view},
            {"degenerate", degenerate_positives}};
  }
  static StepRecord from_json(const json& j) {
    return {j.at("step").get<std::size_t>(),    j.at("lr").get<double>(),
            j.at("total").get<double>(),         j.at("main").get<double>(),
            j.at("case_view").get<double>(),     j.at("element_view").get<double>(),
            j.at("degenerate").get<std::size_t>()};
  }
};

struct ValidationRecord {
  std::size_t step = 0;
  double accuracy = 0.0;
};

/// Joint optimization of the matching loss and both contrastive views.
///
/// Batches are a pure function of (seed, step): triple k of step s is entry
/// (s * B + k) mod n of the permutation drawn for epoch (s * B + k) / n, and
/// the element-view batch and its [DEL] positives use per-step streams. This
/// keeps resumed runs and ablated runs on the same batch stream.
class Trainer {
 public:
  static constexpr std::uint64_t kTripleStream = 0x7219;
  static constexpr std::uint64_t kElementStream = 0xe1e;
  static constexpr std::uint64_t kPositiveStream = 0xde1;

  Trainer(ModelConfig model_config, TrainConfig config, std::uint64_t seed, const Corpus& corpus,
          std::shared_ptr<const FixtureTable> fixture = nullptr, std::optional<Vocabulary> vocab = std::nullopt)
      : config_(config),
        seed_(seed),
        corpus_(&corpus),
        model_(build_model(std::move(model_config), seed, corpus, std::move(fixture), std::move(vocab))) {
    config_.validate();
    if (corpus.train.empty()) throw DegenerateDataset("no training triples");
    triples_ = config_.augment_swap ? augment_swap(corpus.train) : corpus.train;
    prepare_element_cases();
    best_params_ = model_.params();
  }

  const TrainConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  RetrievalModel& model() noexcept { return model_; }
  const RetrievalModel& model() const noexcept { return model_; }
  std::size_t steps_done() const noexcept { return steps_done_; }
  bool finished() const noexcept { return steps_done_ >= config_.steps; }
  const std::vector<StepRecord>& loss_log() const noexcept { return loss_log_; }
  const std::vector<ValidationRecord>& validation_log() const noexcept { return validation_log_; }
  const ParameterStore& best_parameters() const noexcept { return best_params_; }
  std::optional<double> best_validation_accuracy() const { return best_accuracy_; }
  std::size_t best_step() const noexcept { return best_step_; }
  const std::vector<Triple>& training_triples() const noexcept { return triples_; }

  /// Triples used by update `step` (0-based).
  std::vector<Triple> triple_batch(std::size_t step) {
    const std::size_t n = triples_.size();
    const std::size_t b = std::min(config_.batch_size, n);
    std::vector<Triple> out;
    out.reserve(b);
    for (std::size_t k = 0; k < b; ++k) {
      const std::size_t g = step * b + k;
      out.push_back(triples_[epoch_order(g / n)[g % n]]);
    }
    return out;
  }

  /// Case ids used by the element view at update `step` (0-based).
  std::vector<std::string> element_batch(std::size_t step) const {
    const std::size_t count = std::min(config_.batch_size, element_ids_.size());
    Rng rng(mix_seed(seed_, kElementStream, step));
    std::vector<std::string> out;
    for (std::size_t i : rng.sample_without_replacement(element_ids_.size(), count)) out.push_back(element_ids_[i]);
    return out;
  }

  struct StepLoss {
    Var total;
    StepRecord record;
  };

  /// Records the full objective of update `step` (0-based) on `tape`.
  StepLoss step_loss(Tape& tape, std::size_t step) {
    StepRecord rec;
    rec.step = step + 1;
    rec.learning_rate = lr_at(step + 1, config_.steps, config_.warmup_fraction, config_.learning_rate);

    // Each view pools into its own cache so a view weighted by zero leaves
    // the gradient summation order of the other terms unchanged.
    std::map<std::string, Var> encoded, pooled_case, pooled_element;
    auto enc = [&](const std::string& id) {
      auto it = encoded.find(id);
      if (it != encoded.end()) return it->second;
      return encoded.emplace(id, model_.encode(tape, corpus_->at(id))).first->second;
    };
    auto pool_of = [&](std::map<std::string, Var>& cache, const std::string& id) {
      auto it = cache.find(id);
      if (it != cache.end()) return it->second;
      return cache.emplace(id, model_.pool(tape, enc(id))).first->second;
    };

    const std::vector<Triple> batch = triple_batch(step);
    std::vector<Var> main_terms;
    for (const Triple& t : batch) {
      Var y = model_.predict(tape, enc(t.query_id), enc(t.cand_b_id), enc(t.cand_c_id));
      main_terms.push_back(main_loss(y, t.label));
    }
    Var main = mean(concat(main_terms, 1));

    std::optional<Var> case_view, element_view;
    if (config_.use_case_view) {
      std::vector<CaseViewItem> items;
      for (const Triple& t : batch) {
        const std::string& pos = t.label == 0 ? t.cand_b_id : t.cand_c_id;
        const std::string& neg = t.label == 0 ? t.cand_c_id : t.cand_b_id;
        items.push_back({pool_of(pooled_case, t.query_id), pool_of(pooled_case, pos), pool_of(pooled_case, neg)});
      }
      case_view = case_view_loss(items, model_.config().temperatures.case_view);
    }
    if (config_.use_element_view) {
      std::vector<ElementViewPair> pairs;
      for (const std::string& id : element_batch(step)) {
        const ElementViewInstance inst = element_instance(id, step);
        rec.degenerate_positives += inst.degenerate ? 1 : 0;
        Var original = pool_of(pooled_element, id);
        Var positive = inst.degenerate ? original : model_.pool(tape, model_.encode_tokens(tape, id, inst.positive));
        pairs.push_back({original, positive});
      }
      element_view = element_view_loss(pairs, model_.config().temperatures.element_view);
    }

    Var total = total_loss(main, case_view, element_view, config_.lambda_case, config_.lambda_element);
    rec.main = main.value().item();
    rec.case_view = case_view ? case_view->value().item() : 0.0;
    rec.element_view = element_view ? element_view->value().item() : 0.0;
    rec.total = total.value().item();
    return {total, rec};
  }

  /// The [DEL] positive of training case `id` at update `step` (0-based).
  ElementViewInstance element_instance(const std::string& id, std::size_t step) const {
    auto it = element_cases_.find(id);
    if (it == element_cases_.end()) throw ContractError("'" + id + "' is not an element-view training case");
    const ElementCase& ec = it->second;
    return build_element_positive(ec.document, ec.flags, model_.config().element_budget,
                                  mix_seed(seed_, kPositiveStream, mix_seed(step, ec.index)));
  }

  /// One optimizer update.
  StepRecord step() {
    if (finished()) throw ContractError("trainer: step budget exhausted");
    Tape tape;
    StepLoss loss = step_loss(tape, steps_done_);
    tape.backward(loss.total);
    adam_step(model_.params(), loss.record.learning_rate, config_.adam);
    ++steps_done_;
    loss_log_.push_back(loss.record);
    return loss.record;
  }

  MetricsReport evaluate(std::span<const Triple> triples) const {
    return evaluate_triples(model_, *corpus_, triples, config_.threads);
  }

  /// Scores the current parameters on the validation split and keeps them if
  /// they beat every earlier evaluation. Without a validation split the most
  /// recent parameters are kept.
  void validate() {
    if (corpus_->validation.empty()) {
      best_params_ = model_.params();
      best_step_ = steps_done_;
      return;
    }
    const double acc = evaluate(corpus_->validation).accuracy;
    validation_log_.push_back({steps_done_, acc});
    if (!best_accuracy_ || acc > *best_accuracy_) {
      best_accuracy_ = acc;
      best_params_ = model_.params();
      best_step_ = steps_done_;
    }
  }

  /// Runs the remaining budget, validating every eval_every updates and at the end.
  void run(const std::function<void(const StepRecord&)>& on_step = {}) {
    while (!finished()) {
      const StepRecord rec = step();
      if (on_step) on_step(rec);
      const bool due = config_.eval_every > 0 && steps_done_ % config_.eval_every == 0;
      if (due || finished()) validate();
    }
  }

  /// Restores progress saved by a checkpoint; parameters must already be loaded.
  void restore(std::size_t steps_done, std::vector<StepRecord> loss_log, std::vector<ValidationRecord> validation_log,
               ParameterStore best_params, std::optional<double> best_accuracy, std::size_t best_step) {
    if (steps_done > config_.steps) throw FormatError("checkpoint step exceeds the configured step budget");
    steps_done_ = steps_done;
    loss_log_ = std::move(loss_log);
    validation_log_ = std::move(validation_log);
    best_params_ = std::move(best_params);
    best_accuracy_ = best_accuracy;
    best_step_ = best_step;
  }

 private:
  static RetrievalModel build_model(ModelConfig model_config, std::uint64_t seed, const Corpus& corpus,
                                    std::shared_ptr<const FixtureTable> fixture, std::optional<Vocabulary> vocab) {
    if (!vocab) vocab = corpus_vocabulary(corpus, model_config.encoder.hash_buckets);
    return RetrievalModel(std::move(model_config), std::move(*vocab), seed, std::move(fixture));
  }

  struct ElementCase {
    CaseDocument document;  // front-truncated
    std::vector<bool> flags;
    std::uint64_t index = 0;
  };

  const std::vector<std::size_t>& epoch_order(std::size_t epoch) {
    if (!order_ || order_epoch_ != epoch) {
      std::vector<std::size_t> order(triples_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(mix_seed(seed_, kTripleStream, epoch));
      rng.shuffle(order);
      order_ = std::move(order);
      order_epoch_ = epoch;
    }
    return *order_;
  }

  void prepare_element_cases() {
    if (!config_.use_element_view) return;
    element_ids_ = corpus_->train_case_ids();
    if (element_ids_.size() < 2) throw DegenerateDataset("element view needs at least two training cases");
    std::uint64_t index = 0;
    for (const std::string& id : element_ids_) {
      auto it = corpus_->annotations.find(id);
      if (it == corpus_->annotations.end()) throw IntegrityError("no element annotation for training case '" + id + "'");
      validate_annotation(it->second, corpus_->cases);
      TruncatedCase tc = truncate_front(corpus_->at(id), model_.config().max_len);
      element_cases_[id] = {std::move(tc.document), clip_flags(it->second.flags, tc.dropped_sentences), index++};
    }
  }

  TrainConfig config_;
  std::uint64_t seed_;
  const Corpus* corpus_;
  RetrievalModel model_;
  std::vector<Triple> triples_;
  std::vector<std::string> element_ids_;
  std::map<std::string, ElementCase> element_cases_;
  std::optional<std::vector<std::size_t>> order_;
  std::size_t order_epoch_ = 0;

  std::size_t steps_done_ = 0;
  std::vector<StepRecord> loss_log_;
  std::vector<ValidationRecord> validation_log_;
  ParameterStore best_params_;
  std::optional<double> best_accuracy_;
  std::size_t best_step_ = 0;
};

}  // namespace mvcl
