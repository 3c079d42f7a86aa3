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

// Checkpoint directories.
//
//   config.json     resolved RunConfig
//   vocab.json      token vocabulary
//   params.json     selected (best-validation) parameter values
//   state.json      step, selection state, current parameters + Adam moments
//   loss_log.jsonl  one StepRecord per update
//
// Everything is plain JSON with round-trip double formatting, so a reloaded
// trainer continues bit-identically.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvcl/config.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/indicator.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/model.hpp"
#include "mvcl/trainer.hpp"

namespace mvcl {

namespace fs = std::filesystem;

inline void save_checkpoint(const fs::path& dir, const RunConfig& config, const Trainer& trainer) {
  fs::create_directories(dir);
  write_json_file(dir / "config.json", config_to_json(config));
  write_json_file(dir / "vocab.json", trainer.model().vocab().to_json());
  write_json_file(dir / "params.json", trainer.best_parameters().to_json(false));

  json validation = json::array();
  for (const auto& v : trainer.validation_log()) validation.push_back({{"step", v.step}, {"accuracy", v.accuracy}});
  json state = {{"step", trainer.steps_done()},
                {"best_step", trainer.best_step()},
                {"best_validation_accuracy", nullptr},
                {"validation_log", validation},
                {"current", trainer.model().params().to_json(true)}};
  if (auto best = trainer.best_validation_accuracy()) state["best_validation_accuracy"] = *best;
  write_json_file(dir / "state.json", state);
  write_text_file(dir / "loss_log.jsonl", to_jsonl(trainer.loss_log(), [](const StepRecord& r) { return r.to_json(); }));
}

namespace detail {

inline json read_checkpoint_file(const fs::path& dir, const char* name) {
  const fs::path path = dir / name;
  if (!fs::exists(path)) throw FormatError("checkpoint " + dir.string() + " is missing " + name);
  return read_json_file(path);
}

inline std::shared_ptr<const FixtureTable> fixture_for(const RunConfig& config,
                                                       std::shared_ptr<const FixtureTable> fixture) {
  if (config.model.encoder.kind != EncoderKind::fixture || fixture) return fixture;
  return std::make_shared<const FixtureTable>(load_fixture(config.model.encoder.fixture_path));
}

}  // namespace detail

struct LoadedModel {
  RunConfig config;
  RetrievalModel model;
};

/// The selected parameters of a checkpoint, ready for inference. A fixture
/// encoder reloads its table from the configured path unless one is given.
inline LoadedModel load_model(const fs::path& dir, std::shared_ptr<const FixtureTable> fixture = nullptr) {
  if (!fs::is_directory(dir)) throw FormatError("checkpoint directory not found: " + dir.string());
  RunConfig config = config_from_json(detail::read_checkpoint_file(dir, "config.json"));
  Vocabulary vocab = Vocabulary::from_json(detail::read_checkpoint_file(dir, "vocab.json"));
  fixture = detail::fixture_for(config, std::move(fixture));
  LoadedModel out{config, RetrievalModel(config.model, std::move(vocab), config.seed, std::move(fixture))};
  out.model.params().load_json(detail::read_checkpoint_file(dir, "params.json"));
  return out;
}

/// A trainer positioned exactly where the checkpoint left off.
inline std::unique_ptr<Trainer> resume_trainer(const fs::path& dir, const Corpus& corpus,
                                               std::shared_ptr<const FixtureTable> fixture = nullptr) {
  RunConfig config = config_from_json(detail::read_checkpoint_file(dir, "config.json"));
  Vocabulary vocab = Vocabulary::from_json(detail::read_checkpoint_file(dir, "vocab.json"));
  fixture = detail::fixture_for(config, std::move(fixture));
  auto trainer = std::make_unique<Trainer>(config.model, config.train, config.seed, corpus, std::move(fixture),
                                           std::move(vocab));
  const json state = detail::read_checkpoint_file(dir, "state.json");
  trainer->model().params().load_json(state.at("current"));

  ParameterStore best = trainer->model().params();
  best.load_json(detail::read_checkpoint_file(dir, "params.json"));

  std::vector<StepRecord> log;
  for_each_jsonl(dir / "loss_log.jsonl", [&](std::size_t, const json& r) { log.push_back(StepRecord::from_json(r)); });
  std::vector<ValidationRecord> validation;
  for (const auto& v : state.at("validation_log")) {
    validation.push_back({v.at("step").get<std::size_t>(), v.at("accuracy").get<double>()});
  }
  std::optional<double> best_acc;
  if (!state.at("best_validation_accuracy").is_null()) best_acc = state.at("best_validation_accuracy").get<double>();
  trainer->restore(state.at("step").get<std::size_t>(), std::move(log), std::move(validation), std::move(best),
                   best_acc, state.at("best_step").get<std::size_t>());
  return trainer;
}

inline void save_indicator(const fs::path& dir, const RunConfig& config, const IndicatorModel& model,
                           const IndicatorTrainingLog& log) {
  fs::create_directories(dir);
  write_json_file(dir / "config.json", config_to_json(config));
  write_json_file(dir / "vocab.json", model.vocab().to_json());
  write_json_file(dir / "params.json", model.params().to_json(false));
  json f1 = json::array();
  for (const auto& [step, value] : log.held_out_f1) f1.push_back({{"step", step}, {"f1", value}});
  write_json_file(dir / "training_log.json",
                  {{"losses", log.losses}, {"held_out_f1", f1}, {"best_step", log.best_step}, {"best_f1", log.best_f1}});
}

inline IndicatorModel load_indicator(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("indicator directory not found: " + dir.string());
  RunConfig config = config_from_json(detail::read_checkpoint_file(dir, "config.json"));
  IndicatorModel model(config.indicator, Vocabulary::from_json(detail::read_checkpoint_file(dir, "vocab.json")),
                       config.seed);
  model.params().load_json(detail::read_checkpoint_file(dir, "params.json"));
  return model;
}

}  // namespace mvcl
