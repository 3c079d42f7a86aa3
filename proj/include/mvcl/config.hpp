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

// Run configuration as JSON. Every key is optional and falls back to the
// defaults below; unknown keys are rejected so typos do not pass silently.
//
//   {
//     "seed": 1,
//     "corpus":      {"tokenizer": "character", "terminators": [...]},
//     "model":       {"max_len": 512, "element_budget": 64,
//                     "tau_case": 0.1, "tau_element": 0.1},
//     "encoder":     {"kind": "lookup_recurrent", "dim": 64, "hash_buckets": 0,
//                     "recurrent_hidden": 32, "fixture_path": ""},
//     "matcher":     {"rnn_hidden": 64, "mlp_hidden": 128, "use_ba": true,
//                     "use_sr": true, "rnn_kind": "lstm"},
//     "train":       {"learning_rate": 0.001, "batch_size": 16, "steps": 500,
//                     "warmup_fraction": 0.1, "eval_every": 50,
//                     "lambda_case": 0.01, "lambda_element": 0.01,
//                     "use_case_view": true, "use_element_view": true,
//                     "augment_swap": true, "threads": 0,
//                     "adam": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}},
//     "indicator":   {"encoder": {...}, "pooling": "attention_pool",
//                     "max_len": 512, "steps": 500, "batch_size": 32,
//                     "learning_rate": 0.01, "eval_every": 25,
//                     "held_out_fraction": 0.2, "adam": {...}}
//   }

#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>

#include "mvcl/corpus.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/indicator.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/model.hpp"
#include "mvcl/trainer.hpp"

namespace mvcl {

struct RunConfig {
  std::uint64_t seed = 1;
  CorpusConfig corpus;
  ModelConfig model;
  TrainConfig train;
  IndicatorConfig indicator;

  void validate() const {
    model.validate();
    train.validate();
    indicator.validate();
  }
};

namespace detail {

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
}

inline void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> known) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || k == key;
    if (!ok) throw ConfigError("unknown config key '" + std::string(where) + "." + key + "'");
  }
}

template <typename T>
void read_key(const json& j, std::string_view where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

inline json adam_to_json(const AdamConfig& a) {
  return {{"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

inline void adam_from_json(const json& j, std::string_view where, AdamConfig& a) {
  reject_unknown(j, where, {"beta1", "beta2", "epsilon"});
  read_key(j, where, "beta1", a.beta1);
  read_key(j, where, "beta2", a.beta2);
  read_key(j, where, "epsilon", a.epsilon);
}

inline json encoder_to_json(const EncoderConfig& e) {
  return {{"kind", to_string(e.kind)},
          {"dim", e.dim},
          {"hash_buckets", e.hash_buckets},
          {"recurrent_hidden", e.recurrent_hidden},
          {"fixture_path", e.fixture_path}};
}

inline void encoder_from_json(const json& j, std::string_view where, EncoderConfig& e) {
  reject_unknown(j, where, {"kind", "dim", "hash_buckets", "recurrent_hidden", "fixture_path"});
  std::string kind = to_string(e.kind);
  read_key(j, where, "kind", kind);
  e.kind = parse_encoder_kind(kind);
  read_key(j, where, "dim", e.dim);
  read_key(j, where, "hash_buckets", e.hash_buckets);
  read_key(j, where, "recurrent_hidden", e.recurrent_hidden);
  read_key(j, where, "fixture_path", e.fixture_path);
}

}  // namespace detail

inline json config_to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& ind = c.indicator;
  return {
      {"seed", c.seed},
      {"corpus",
       {{"tokenizer", to_string(c.corpus.tokenizer)},
        {"terminators", std::vector<std::string>(c.corpus.terminators.begin(), c.corpus.terminators.end())}}},
      {"model",
       {{"max_len", m.max_len},
        {"element_budget", m.element_budget},
        {"tau_case", m.temperatures.case_view},
        {"tau_element", m.temperatures.element_view}}},
      {"encoder", detail::encoder_to_json(m.encoder)},
      {"matcher",
       {{"rnn_hidden", m.matcher.rnn_hidden},
        {"mlp_hidden", m.matcher.mlp_hidden},
        {"use_ba", m.matcher.use_ba},
        {"use_sr", m.matcher.use_sr},
        {"rnn_kind", to_string(m.matcher.rnn_kind)}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"steps", t.steps},
        {"warmup_fraction", t.warmup_fraction},
        {"eval_every", t.eval_every},
        {"lambda_case", t.lambda_case},
        {"lambda_element", t.lambda_element},
        {"use_case_view", t.use_case_view},
        {"use_element_view", t.use_element_view},
        {"augment_swap", t.augment_swap},
        {"threads", t.threads},
        {"adam", detail::adam_to_json(t.adam)}}},
      {"indicator",
       {{"encoder", detail::encoder_to_json(ind.encoder)},
        {"pooling", to_string(ind.pooling)},
        {"max_len", ind.max_len},
        {"steps", ind.steps},
        {"batch_size", ind.batch_size},
        {"learning_rate", ind.learning_rate},
        {"eval_every", ind.eval_every},
        {"held_out_fraction", ind.held_out_fraction},
        {"adam", detail::adam_to_json(ind.adam)}}},
  };
}

/// Applies the keys present in `j` on top of `base`.
inline RunConfig config_from_json(const json& j, RunConfig base = {}) {
  using detail::read_key;
  using detail::reject_unknown;
  RunConfig c = std::move(base);
  reject_unknown(j, "config", {"seed", "corpus", "model", "encoder", "matcher", "train", "indicator"});
  read_key(j, "config", "seed", c.seed);

  if (j.contains("corpus")) {
    const json& k = j.at("corpus");
    reject_unknown(k, "corpus", {"tokenizer", "terminators"});
    std::string tok = to_string(c.corpus.tokenizer);
    read_key(k, "corpus", "tokenizer", tok);
    c.corpus.tokenizer = parse_tokenize_mode(tok);
    if (k.contains("terminators")) {
      std::vector<std::string> terms;
      read_key(k, "corpus", "terminators", terms);
      c.corpus.terminators = {terms.begin(), terms.end()};
    }
  }
  if (j.contains("model")) {
    const json& k = j.at("model");
    reject_unknown(k, "model", {"max_len", "element_budget", "tau_case", "tau_element"});
    read_key(k, "model", "max_len", c.model.max_len);
    read_key(k, "model", "element_budget", c.model.element_budget);
    read_key(k, "model", "tau_case", c.model.temperatures.case_view);
    read_key(k, "model", "tau_element", c.model.temperatures.element_view);
  }
  if (j.contains("encoder")) detail::encoder_from_json(j.at("encoder"), "encoder", c.model.encoder);
  if (j.contains("matcher")) {
    const json& k = j.at("matcher");
    reject_unknown(k, "matcher", {"rnn_hidden", "mlp_hidden", "use_ba", "use_sr", "rnn_kind"});
    read_key(k, "matcher", "rnn_hidden", c.model.matcher.rnn_hidden);
    read_key(k, "matcher", "mlp_hidden", c.model.matcher.mlp_hidden);
    read_key(k, "matcher", "use_ba", c.model.matcher.use_ba);
    read_key(k, "matcher", "use_sr", c.model.matcher.use_sr);
    std::string kind = to_string(c.model.matcher.rnn_kind);
    read_key(k, "matcher", "rnn_kind", kind);
    c.model.matcher.rnn_kind = parse_rnn_kind(kind);
  }
  if (j.contains("train")) {
    const json& k = j.at("train");
    reject_unknown(k, "train",
                   {"learning_rate", "batch_size", "steps", "warmup_fraction", "eval_every", "lambda_case",
                    "lambda_element", "use_case_view", "use_element_view", "augment_swap", "threads", "adam"});
    auto& t = c.train;
    read_key(k, "train", "learning_rate", t.learning_rate);
    read_key(k, "train", "batch_size", t.batch_size);
    read_key(k, "train", "steps", t.steps);
    read_key(k, "train", "warmup_fraction", t.warmup_fraction);
    read_key(k, "train", "eval_every", t.eval_every);
    read_key(k, "train", "lambda_case", t.lambda_case);
    read_key(k, "train", "lambda_element", t.lambda_element);
    read_key(k, "train", "use_case_view", t.use_case_view);
    read_key(k, "train", "use_element_view", t.use_element_view);
    read_key(k, "train", "augment_swap", t.augment_swap);
    read_key(k, "train", "threads", t.threads);
    if (k.contains("adam")) detail::adam_from_json(k.at("adam"), "train.adam", t.adam);
  }
  if (j.contains("indicator")) {
    const json& k = j.at("indicator");
    reject_unknown(k, "indicator",
                   {"encoder", "pooling", "max_len", "steps", "batch_size", "learning_rate", "eval_every",
                    "held_out_fraction", "adam"});
    auto& ind = c.indicator;
    if (k.contains("encoder")) detail::encoder_from_json(k.at("encoder"), "indicator.encoder", ind.encoder);
    std::string pooling = to_string(ind.pooling);
    read_key(k, "indicator", "pooling", pooling);
    ind.pooling = parse_pooling(pooling);
    read_key(k, "indicator", "max_len", ind.max_len);
    read_key(k, "indicator", "steps", ind.steps);
    read_key(k, "indicator", "batch_size", ind.batch_size);
    read_key(k, "indicator", "learning_rate", ind.learning_rate);
    read_key(k, "indicator", "eval_every", ind.eval_every);
    read_key(k, "indicator", "held_out_fraction", ind.held_out_fraction);
    if (k.contains("adam")) detail::adam_from_json(k.at("adam"), "indicator.adam", ind.adam);
  }
  c.model.matcher.dim = c.model.encoder.dim;
  c.validate();
  return c;
}

/// Reads a config file; a missing or malformed file is a ConfigError.
inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = read_json_file(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace mvcl
