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
#include <span>
#include <string>
#include <vector>

#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

struct Temperatures {
  double case_view = 0.1;
  double element_view = 0.1;

  void validate() const {
    if (!(case_view > 0.0) || !(element_view > 0.0)) throw ConfigError("temperatures must be > 0");
  }
};

/// Learned attention pooling of token rows into one document vector:
/// u_i = relu(W h_i + b), alpha = softmax_i(u_i . u_w), out = sum_i alpha_i u_i.
class AttentionPoolHead {
 public:
  AttentionPoolHead() = default;
  AttentionPoolHead(std::size_t dim, std::string prefix) : dim_(dim), prefix_(std::move(prefix)) {}

  std::size_t dim() const noexcept { return dim_; }
  const std::string& prefix() const noexcept { return prefix_; }

  void register_parameters(ParameterStore& store, Rng& rng) const {
    store.add_uniform(prefix_ + ".w", {dim_, dim_}, dim_, rng);
    store.add_uniform(prefix_ + ".b", {1, dim_}, dim_, rng);
    store.add_uniform(prefix_ + ".u_w", {dim_, 1}, dim_, rng);
  }

  /// Pools n x dim rows to 1 x dim; `weights` receives the n x 1 distribution.
  Var pool(Tape& tape, ParameterStore& store, const Var& h, Var* weights = nullptr) const {
    if (h.value().cols() != dim_) {
      throw ShapeError("attention_pool: expected width " + std::to_string(dim_) + ", got " + to_string(h.shape()));
    }
    Var u = relu(affine(h, tape.parameter(store, prefix_ + ".w"), tape.parameter(store, prefix_ + ".b")));
    Var alpha = softmax(matmul(u, tape.parameter(store, prefix_ + ".u_w")), 0);
    if (weights != nullptr) *weights = alpha;
    return matmul(transpose(alpha), u);
  }

 private:
  std::size_t dim_ = 0;
  std::string prefix_;
};

/// -log( e^{s+/tau} / (e^{s+/tau} + sum_k e^{s-_k/tau}) ) over cosine similarities.
/// The positive term is not repeated among the negatives.
inline Var info_nce(const Var& anchor, const Var& positive, std::span<const Var> negatives, double temperature) {
  if (negatives.empty()) throw ContractError("contrastive loss needs at least one negative");
  if (!(temperature > 0.0)) throw ContractError("temperature must be > 0");
  std::vector<Var> sims;
  sims.reserve(negatives.size() + 1);
  sims.push_back(cosine_similarity(anchor, positive));
  for (const Var& n : negatives) sims.push_back(cosine_similarity(anchor, n));
  Var logits = scale(concat(sims, 1), 1.0 / temperature);
  return scale(log(slice(softmax(logits, 1), 1, 0, 1)), -1.0);
}

/// Pooled (1 x d) representations of one triple, already ordered by its label.
struct CaseViewItem {
  Var anchor;    // the query
  Var positive;  // the more relevant candidate
  Var negative;  // the other candidate
};

/// Mean over anchors; negatives are the in-triple negative plus all three
/// cases of every other triple in the batch.
inline Var case_view_loss(std::span<const CaseViewItem> batch, double temperature) {
  if (batch.empty()) throw ContractError("case_view_loss: empty batch");
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<Var> negatives{batch[i].negative};
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      negatives.push_back(batch[j].anchor);
      negatives.push_back(batch[j].positive);
      negatives.push_back(batch[j].negative);
    }
    terms.push_back(info_nce(batch[i].anchor, batch[i].positive, negatives, temperature));
  }
  return mean(concat(terms, 1));
}

struct ElementViewInstance {
  std::string case_id;
  std::vector<std::string> original;
  std::vector<std::string> positive;
  std::vector<std::size_t> deleted_sentences;  // in draw order
  std::vector<std::size_t> deleted_lengths;    // tokens masked per drawn sentence
  std::size_t deleted_total = 0;
  bool degenerate = false;  // no non-element sentence to delete

  json to_json() const {
    return {{"case_id", case_id},
            {"deleted_sentences", deleted_sentences},
            {"deleted_total", deleted_total},
            {"positive_tokens", positive}};
  }
};

/// Positive view of `doc`: non-element sentences drawn uniformly without
/// replacement get their tokens replaced by [DEL] until `budget` tokens are
/// masked. The last drawn sentence may be masked only on its leading tokens.
/// When the non-element sentences hold fewer than `budget` tokens, all of
/// them are masked.
inline ElementViewInstance build_element_positive(const CaseDocument& doc, const std::vector<bool>& flags,
                                                  std::size_t budget, std::uint64_t seed) {
  if (flags.size() != doc.sentence_count()) {
    throw IntegrityError("element flags for '" + doc.id + "' do not match its sentence count");
  }
  ElementViewInstance inst;
  inst.case_id = doc.id;
  inst.original = doc.tokens;
  inst.positive = doc.tokens;

  std::vector<std::size_t> candidates;
  for (std::size_t s = 0; s < flags.size(); ++s) {
    if (!flags[s]) candidates.push_back(s);
  }
  inst.degenerate = candidates.empty();
  Rng rng(seed);
  rng.shuffle(candidates);

  std::size_t remaining = budget;
  for (std::size_t s : candidates) {
    if (remaining == 0) break;
    const Span& span = doc.sentences[s];
    const std::size_t take = std::min(span.size(), remaining);
    for (std::size_t k = span.begin; k < span.begin + take; ++k) inst.positive[k] = std::string(kDelToken);
    inst.deleted_sentences.push_back(s);
    inst.deleted_lengths.push_back(take);
    inst.deleted_total += take;
    remaining -= take;
  }
  return inst;
}

/// Pooled representations of an original case and its positive view.
struct ElementViewPair {
  Var original;
  Var positive;
};

/// Mean over the N originals; each anchor's negatives are the other 2N - 2
/// pooled sequences (other originals and their positives).
inline Var element_view_loss(std::span<const ElementViewPair> batch, double temperature) {
  if (batch.size() < 2) throw ContractError("element_view_loss: needs N >= 2 instances for in-batch negatives");
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<Var> negatives;
    negatives.reserve(2 * batch.size() - 2);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      negatives.push_back(batch[j].original);
      negatives.push_back(batch[j].positive);
    }
    terms.push_back(info_nce(batch[i].original, batch[i].positive, negatives, temperature));
  }
  return mean(concat(terms, 1));
}

}  // namespace mvcl
