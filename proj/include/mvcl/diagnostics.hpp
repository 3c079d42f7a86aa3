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

#include <cstddef>
#include <cstdint>

#include "mvcl/autodiff/gradcheck.hpp"
#include "mvcl/model.hpp"
#include "mvcl/synthetic.hpp"
#include "mvcl/trainer.hpp"

namespace mvcl {

struct CompositeCheckConfig {
  std::size_t dim = 8;
  std::size_t rnn_hidden = 6;
  std::size_t max_len = 10;
  std::size_t batch = 2;
  std::uint64_t seed = 1;
  GradcheckOptions options;
};

/// Finite-difference check of the full training objective (matching loss +
/// both contrastive views) for one batch of a small synthetic corpus, with a
/// recurrent lookup encoder and every matcher component enabled.
inline GradcheckReport gradcheck_training_objective(const CompositeCheckConfig& cc) {
  SyntheticConfig sc;
  sc.train_triples = cc.batch;
  sc.filler_sentences = 1;
  sc.filler_length = 3;
  sc.seed = cc.seed;
  const SyntheticCorpus data = make_loan_corpus(sc);

  ModelConfig mc;
  mc.max_len = cc.max_len;
  mc.encoder = {EncoderKind::lookup_recurrent, cc.dim, 0, cc.rnn_hidden, {}};
  mc.matcher.dim = cc.dim;
  mc.matcher.rnn_hidden = cc.rnn_hidden;
  mc.matcher.mlp_hidden = cc.dim;
  mc.element_budget = 3;

  TrainConfig tc;
  tc.batch_size = cc.batch;
  tc.steps = 1;
  tc.augment_swap = false;
  Trainer trainer(mc, tc, cc.seed, data.corpus);

  GradcheckOptions options = cc.options;
  options.seed = cc.seed;
  return gradcheck([&](Tape& tape, ParameterStore&) { return trainer.step_loss(tape, 0).total; },
                   trainer.model().params(), options);
}

}  // namespace mvcl
