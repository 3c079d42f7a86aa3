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
#include <string>
#include <string_view>
#include <utility>

#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/recurrent.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

enum class RnnKind { lstm, gru, none };

inline std::string to_string(RnnKind kind) {
  switch (kind) {
    case RnnKind::lstm: return "lstm";
    case RnnKind::gru: return "gru";
    case RnnKind::none: return "none";
  }
  return "?";
}

inline RnnKind parse_rnn_kind(std::string_view name) {
  if (name == "lstm") return RnnKind::lstm;
  if (name == "gru") return RnnKind::gru;
  if (name == "none") return RnnKind::none;
  throw ConfigError("unknown rnn kind '" + std::string(name) + "' (expected lstm|gru|none)");
}

struct MatchConfig {
  std::size_t dim = 64;
  std::size_t rnn_hidden = 64;
  std::size_t mlp_hidden = 128;
  bool use_ba = true;
  bool use_sr = true;
  RnnKind rnn_kind = RnnKind::lstm;

  void validate() const {
    if (dim < 1 || rnn_hidden < 1 || mlp_hidden < 1) throw ConfigError("matcher sizes must be >= 1");
  }

  std::size_t strengthened_width() const { return (use_sr ? 4 : 2) * dim; }
  std::size_t representation_width() const { return 8 * rnn_hidden; }
};

/// Raw scores and both normalizations of the query/candidate alignment.
/// All three are o x m; a_to_b rows sum to 1, b_to_a columns sum to 1.
struct AttentionRecord {
  Tensor scores;
  Tensor a_to_b;
  Tensor b_to_a;
};

struct AlignedPair {
  Var aligned_a;  // o x d, weighted sums of h_b rows
  Var aligned_b;  // m x d, weighted sums of h_a rows
  Var scores;
  Var a_to_b;
  Var b_to_a;

  AttentionRecord record() const { return {scores.value(), a_to_b.value(), b_to_a.value()}; }
};

/// Scaled dot-product alignment in both directions.
inline AlignedPair bidirectional_attention(const Var& h_a, const Var& h_b) {
  if (h_a.value().cols() != h_b.value().cols()) {
    throw ShapeError("bidirectional_attention: dimension mismatch " + to_string(h_a.shape()) + " vs " +
                     to_string(h_b.shape()));
  }
  const double d = static_cast<double>(h_a.value().cols());
  AlignedPair out;
  out.scores = scale(matmul(h_a, transpose(h_b)), 1.0 / std::sqrt(d));
  out.a_to_b = softmax(out.scores, 1);
  out.b_to_a = softmax(out.scores, 0);
  out.aligned_a = matmul(out.a_to_b, h_b);
  out.aligned_b = matmul(transpose(out.b_to_a), h_a);
  return out;
}

/// [h; h~; h - h~; h * h~], or [h; h~] when `use_sr` is false.
inline Var strengthen(const Var& h, const Var& aligned, bool use_sr = true) {
  if (h.shape() != aligned.shape()) {
    throw ShapeError("strengthen: shape mismatch " + to_string(h.shape()) + " vs " + to_string(aligned.shape()));
  }
  if (!use_sr) return concat({h, aligned}, 1);
  return concat({h, aligned, sub(h, aligned), mul(h, aligned)}, 1);
}

/// [avg(v_a); max(v_a); avg(v_b); max(v_b)] pooled over time.
inline Var pool_and_concat(const Var& v_a, const Var& v_b) {
  return concat({avg_pool(v_a, 0), max_pool(v_a, 0), avg_pool(v_b, 0), max_pool(v_b, 0)}, 1);
}

/// Cross-entropy on the class-1 probability, clamped to [1e-12, 1 - 1e-12].
inline Var main_loss(const Var& y_hat, int label) {
  constexpr double kClamp = 1e-12;
  Var p = clamp(y_hat, kClamp, 1.0 - kClamp);
  if (label == 1) return scale(log(p), -1.0);
  Tape& tape = y_hat.tape();
  return scale(log(sub(tape.constant(Tensor::scalar(1.0)), p)), -1.0);
}

/// Interaction network between a query and one candidate, plus the
/// difference classifier over two candidates.
class Matcher {
 public:
  Matcher() = default;
  Matcher(MatchConfig config, std::string prefix) : config_(config), prefix_(std::move(prefix)) {
    config_.validate();
    if (config_.rnn_kind != RnnKind::none) {
      const CellKind cell = config_.rnn_kind == RnnKind::lstm ? CellKind::lstm : CellKind::gru;
      rnn_ = BidirectionalRecurrent(prefix_ + ".rnn", cell, config_.strengthened_width(), config_.rnn_hidden);
    }
  }

  const MatchConfig& config() const noexcept { return config_; }
  const std::string& prefix() const noexcept { return prefix_; }

  void register_parameters(ParameterStore& store, Rng& rng) const {
    const std::size_t in = config_.strengthened_width();
    const std::size_t width = 2 * config_.rnn_hidden;
    if (config_.rnn_kind == RnnKind::none) {
      store.add_uniform(prefix_ + ".proj.w", {in, width}, in, rng);
      store.add_uniform(prefix_ + ".proj.b", {1, width}, in, rng);
    } else {
      rnn_.register_parameters(store, rng);
    }
    const std::size_t rep = config_.representation_width();
    store.add_uniform(prefix_ + ".mlp.w1", {rep, config_.mlp_hidden}, rep, rng);
    store.add_uniform(prefix_ + ".mlp.b1", {1, config_.mlp_hidden}, rep, rng);
    store.add_uniform(prefix_ + ".mlp.w2", {config_.mlp_hidden, 2}, config_.mlp_hidden, rng);
    store.add_uniform(prefix_ + ".mlp.b2", {1, 2}, config_.mlp_hidden, rng);
  }

  /// Shared sequence aggregation applied to one strengthened sequence.
  Var aggregate_one(Tape& tape, ParameterStore& store, const Var& m) const {
    if (config_.rnn_kind == RnnKind::none) {
      return affine(m, tape.parameter(store, prefix_ + ".proj.w"), tape.parameter(store, prefix_ + ".proj.b"));
    }
    return rnn_.forward(tape, store, m);
  }

  std::pair<Var, Var> aggregate(Tape& tape, ParameterStore& store, const Var& m_a, const Var& m_b) const {
    return {aggregate_one(tape, store, m_a), aggregate_one(tape, store, m_b)};
  }

  /// H for (query, candidate); fills `record` with the alignment when given.
  Var pair_representation(Tape& tape, ParameterStore& store, const Var& h_a, const Var& h_b,
                          AttentionRecord* record = nullptr) const {
    Var aligned_a = h_a, aligned_b = h_b;
    if (config_.use_ba) {
      AlignedPair att = bidirectional_attention(h_a, h_b);
      aligned_a = att.aligned_a;
      aligned_b = att.aligned_b;
      if (record != nullptr) *record = att.record();
    } else if (record != nullptr) {
      // Ablated attention has no alignment; report the one that would exist.
      Tape scratch(false);
      *record = bidirectional_attention(scratch.constant(h_a.value()), scratch.constant(h_b.value())).record();
    }
    auto [v_a, v_b] = aggregate(tape, store, strengthen(h_a, aligned_a, config_.use_sr),
                                strengthen(h_b, aligned_b, config_.use_sr));
    return pool_and_concat(v_a, v_b);
  }

  /// Softmax over two logits from MLP(H_ab - H_ac); returns the 1 x 2 distribution.
  Var classify_distribution(Tape& tape, ParameterStore& store, const Var& h_ab, const Var& h_ac) const {
    if (h_ab.shape() != h_ac.shape()) {
      throw ShapeError("classify: representation shapes differ " + to_string(h_ab.shape()) + " vs " +
                       to_string(h_ac.shape()));
    }
    Var hidden = tanh(affine(sub(h_ab, h_ac), tape.parameter(store, prefix_ + ".mlp.w1"),
                             tape.parameter(store, prefix_ + ".mlp.b1")));
    Var logits =
        affine(hidden, tape.parameter(store, prefix_ + ".mlp.w2"), tape.parameter(store, prefix_ + ".mlp.b2"));
    return softmax(logits, 1);
  }

  /// Probability that the second candidate (C) is the more relevant one.
  Var classify(Tape& tape, ParameterStore& store, const Var& h_ab, const Var& h_ac) const {
    return slice(classify_distribution(tape, store, h_ab, h_ac), 1, 1, 2);
  }

 private:
  MatchConfig config_;
  std::string prefix_;
  BidirectionalRecurrent rnn_;
};

}  // namespace mvcl
