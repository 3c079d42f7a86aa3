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

// The `mvcl` command line. Requires linking OpenSSL::Crypto (input digests).
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 contract failure (including a failed gradcheck).

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "mvcl/checkpoint.hpp"
#include "mvcl/config.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/diagnostics.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/evalkit.hpp"
#include "mvcl/indicator.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/matcher.hpp"
#include "mvcl/model.hpp"
#include "mvcl/ranker.hpp"
#include "mvcl/trainer.hpp"

namespace mvcl::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kContractFailure = 3 };

/// A usage problem detected after parsing (missing combination of flags).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Levenshtein distance.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Closest candidate within a third of the word length (at least 2 edits).
inline std::optional<std::string> suggest(std::string_view word, const std::vector<std::string>& candidates) {
  std::optional<std::string> best;
  std::size_t best_distance = std::max<std::size_t>(2, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  return best;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

struct RunManifest {
  std::string subcommand;
  json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // path -> sha256
  double duration_seconds = 0.0;

  void add_input(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) {
      for (const char* name : {"config.json", "vocab.json", "params.json"}) {
        if (std::filesystem::exists(path / name)) inputs[(path / name).string()] = sha256_file(path / name);
      }
      return;
    }
    inputs[path.string()] = sha256_file(path);
  }

  json to_json() const {
    return {{"subcommand", subcommand},      {"config", config},
            {"seed", seed},                  {"inputs", inputs},
            {"tool_version", std::string(kVersion)}, {"duration_seconds", duration_seconds}};
  }
};

namespace detail {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string manifest_path;
  std::string tokenizer;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file (every key optional)");
  sub->add_option("--seed", c.seed, "Random seed (falls back to the config, then MVCL_SEED, then 1)");
  sub->add_option("--manifest", c.manifest_path, "Where to write the run manifest");
  sub->add_option("--tokenizer", c.tokenizer, "Tokenizer for text inputs: character|whitespace");
}

/// Config file + flag overrides + seed fallback chain.
inline RunConfig resolve_config(const Common& c) {
  RunConfig config;
  bool seed_in_file = false;
  if (!c.config_path.empty()) {
    config = load_config(c.config_path);
    seed_in_file = read_json_file(c.config_path).contains("seed");
  }
  if (c.seed) {
    config.seed = *c.seed;
  } else if (!seed_in_file) {
    if (const char* env = std::getenv("MVCL_SEED"); env != nullptr && *env != '\0') {
      try {
        std::size_t used = 0;
        config.seed = std::stoull(env, &used);
        if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError(std::string("MVCL_SEED is not an unsigned integer: ") + env);
      }
    }
  }
  if (!c.tokenizer.empty()) config.corpus.tokenizer = parse_tokenize_mode(c.tokenizer);
  return config;
}

inline void emit_manifest(const Common& c, RunManifest& manifest, std::chrono::steady_clock::time_point start,
                          const std::optional<std::filesystem::path>& out_dir, std::ostream& err) {
  manifest.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!c.manifest_path.empty()) {
    write_json_file(c.manifest_path, manifest.to_json());
  } else if (out_dir) {
    write_json_file(*out_dir / "manifest.json", manifest.to_json());
  } else {
    err << "manifest: " << manifest.to_json().dump() << "\n";
  }
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void write_or_print(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

/// Top-k tokens by summed incoming attention mass, ties to the lower index.
inline json top_tokens(const std::vector<double>& mass, std::span<const std::string> tokens, std::size_t offset,
                       std::size_t k) {
  std::vector<std::size_t> order(mass.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mass[a] > mass[b]; });
  json out = json::array();
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    const std::size_t i = order[r];
    out.push_back({{"index", offset + i}, {"token", tokens[offset + i]}, {"weight", mass[i]}});
  }
  return out;
}

inline json attention_report(const RetrievalModel& model, const CaseDocument& q, const CaseDocument& c,
                             std::size_t top_k) {
  Tape tape(false);
  AttentionRecord record;
  model.pair_representation(tape, model.encode(tape, q), model.encode(tape, c), &record);
  const std::size_t o = record.scores.rows(), m = record.scores.cols();
  // Query token i receives b_to_a(i, j) from every candidate token j;
  // candidate token j receives a_to_b(i, j) from every query token i.
  std::vector<double> query_mass(o, 0.0), cand_mass(m, 0.0);
  for (std::size_t i = 0; i < o; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      query_mass[i] += record.b_to_a(i, j);
      cand_mass[j] += record.a_to_b(i, j);
    }
  }
  return {{"query_id", q.id},
          {"cand_id", c.id},
          {"top_query_tokens", top_tokens(query_mass, q.tokens, q.tokens.size() - o, top_k)},
          {"top_cand_tokens", top_tokens(cand_mass, c.tokens, c.tokens.size() - m, top_k)}};
}

inline std::shared_ptr<const FixtureTable> maybe_fixture(const std::string& embeddings) {
  if (embeddings.empty()) return nullptr;
  return std::make_shared<const FixtureTable>(load_fixture(embeddings));
}

}  // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  using detail::Common;
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();

  CLI::App app{"Legal case retrieval: training, ranking and evaluation", "mvcl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // train-indicator
  Common ti_common;
  std::string ti_examples, ti_out;
  std::optional<std::size_t> ti_steps;
  std::string ti_pooling;
  auto* ti = app.add_subcommand("train-indicator", "Train the sentence-level legal element indicator");
  detail::add_common(ti, ti_common);
  ti->add_option("--examples", ti_examples, "sentence_examples.jsonl ({text, label})")->required();
  ti->add_option("--out", ti_out, "Output checkpoint directory")->required();
  ti->add_option("--steps", ti_steps, "Training steps");
  ti->add_option("--pooling", ti_pooling, "cls_token|last_token|attention_pool");

  // annotate
  Common an_common;
  std::string an_cases, an_model, an_out;
  auto* an = app.add_subcommand("annotate", "Flag element-bearing sentences of every case with a trained indicator");
  detail::add_common(an, an_common);
  an->add_option("--cases", an_cases, "cases.jsonl")->required();
  an->add_option("--model", an_model, "Indicator checkpoint directory")->required();
  an->add_option("--out", an_out, "Output elements.jsonl")->required();

  // build-contrastive
  Common bc_common;
  std::string bc_cases, bc_elements, bc_out;
  std::optional<std::size_t> bc_l1;
  auto* bc = app.add_subcommand("build-contrastive", "Write the [DEL]-masked element-view positive of every case");
  detail::add_common(bc, bc_common);
  bc->add_option("--cases", bc_cases, "cases.jsonl")->required();
  bc->add_option("--elements", bc_elements, "elements.jsonl")->required();
  bc->add_option("--l1", bc_l1, "Deletion budget in tokens");
  bc->add_option("--out", bc_out, "Output instances.jsonl")->required();

  // train
  Common tr_common;
  std::string tr_cases, tr_triples, tr_validation, tr_elements, tr_out, tr_embeddings;
  std::optional<std::size_t> tr_steps;
  auto* tr = app.add_subcommand("train", "Train the retrieval model");
  detail::add_common(tr, tr_common);
  tr->add_option("--cases", tr_cases, "cases.jsonl")->required();
  tr->add_option("--triples", tr_triples, "Training triples.jsonl")->required();
  tr->add_option("--validation", tr_validation, "Validation triples.jsonl (model selection)");
  tr->add_option("--elements", tr_elements, "elements.jsonl (required by the element view)");
  tr->add_option("--embeddings", tr_embeddings, "embeddings.jsonl; switches the encoder to the fixture kind");
  tr->add_option("--steps", tr_steps, "Training steps");
  tr->add_option("--out", tr_out, "Output checkpoint directory")->required();

  // eval
  Common ev_common;
  std::string ev_model, ev_cases, ev_triples, ev_embeddings, ev_out;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on labelled triples");
  detail::add_common(ev, ev_common);
  ev->add_option("--model", ev_model, "Checkpoint directory")->required();
  ev->add_option("--cases", ev_cases, "cases.jsonl")->required();
  ev->add_option("--triples", ev_triples, "Triples to score")->required();
  ev->add_option("--embeddings", ev_embeddings, "embeddings.jsonl for fixture checkpoints");
  ev->add_option("--out", ev_out, "Write the report here instead of stdout");

  // baseline
  Common bl_common;
  std::string bl_method, bl_cases, bl_triples, bl_out;
  Bm25Params bl_params;
  auto* bl = app.add_subcommand("baseline", "Score triples with a lexical baseline");
  detail::add_common(bl, bl_common);
  bl->add_option("--method", bl_method, "tfidf|bm25")->required();
  bl->add_option("--cases", bl_cases, "cases.jsonl")->required();
  bl->add_option("--triples", bl_triples, "Triples to score")->required();
  bl->add_option("--k1", bl_params.k1, "BM25 k1")->capture_default_str();
  bl->add_option("--b", bl_params.b, "BM25 b")->capture_default_str();
  bl->add_option("--out", bl_out, "Write the report here instead of stdout");

  // rank
  Common rk_common;
  std::string rk_model, rk_cases, rk_query, rk_candidates, rk_method = "wincount", rk_embeddings, rk_out;
  auto* rk = app.add_subcommand("rank", "Rank candidates for a query from pairwise preferences");
  detail::add_common(rk, rk_common);
  rk->add_option("--model", rk_model, "Checkpoint directory")->required();
  rk->add_option("--cases", rk_cases, "cases.jsonl")->required();
  rk->add_option("--query", rk_query, "Query case id")->required();
  rk->add_option("--candidates", rk_candidates, "Comma-separated candidate ids")->required();
  rk->add_option("--method", rk_method, "exhaustive|wincount|probsum")->capture_default_str();
  rk->add_option("--embeddings", rk_embeddings, "embeddings.jsonl for fixture checkpoints");
  rk->add_option("--out", rk_out, "Write the ranking here instead of stdout");

  // dump-attention
  Common da_common;
  std::string da_model, da_cases, da_query, da_cand, da_triples, da_embeddings, da_out;
  std::size_t da_top_k = 10;
  auto* da = app.add_subcommand("dump-attention", "Report the most attended tokens of query/candidate pairs");
  detail::add_common(da, da_common);
  da->add_option("--model", da_model, "Checkpoint directory")->required();
  da->add_option("--cases", da_cases, "cases.jsonl")->required();
  da->add_option("--query", da_query, "Query case id");
  da->add_option("--cand", da_cand, "Candidate case id");
  da->add_option("--triples", da_triples, "Dump both pairs of every triple instead");
  da->add_option("--top-k", da_top_k, "Tokens reported per side")->capture_default_str();
  da->add_option("--embeddings", da_embeddings, "embeddings.jsonl for fixture checkpoints");
  da->add_option("--out", da_out, "Write JSONL here instead of stdout");

  // gradcheck
  Common gc_common;
  CompositeCheckConfig gc;
  auto* gcs = app.add_subcommand("gradcheck", "Finite-difference check of the full training objective");
  detail::add_common(gcs, gc_common);
  gcs->add_option("--d", gc.dim, "Encoder dimension")->capture_default_str();
  gcs->add_option("--hidden", gc.rnn_hidden, "Recurrent hidden size")->capture_default_str();
  gcs->add_option("--max-len", gc.max_len, "Token limit per case")->capture_default_str();
  gcs->add_option("--batch", gc.batch, "Triples per batch")->capture_default_str();
  gcs->add_option("--epsilon", gc.options.epsilon, "Finite-difference step")->capture_default_str();
  gcs->add_option("--tolerance", gc.options.tolerance, "Maximum relative error")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* active = &app;
    if (!app.get_subcommands().empty()) active = app.get_subcommands().back();
    err << "error: " << e.what() << "\n";
    if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr) {
      std::vector<std::string> names;
      for (const CLI::Option* opt : active->get_options()) {
        for (const auto& n : opt->get_lnames()) names.push_back("--" + n);
      }
      for (const CLI::App* sub : active->get_subcommands({})) names.push_back(sub->get_name());
      const std::string what = e.what();
      std::istringstream words(what.substr(what.find(':') + 1));
      std::string word;
      while (words >> word) {
        if (auto s = suggest(word, names)) err << "  unknown '" << word << "'; did you mean '" << *s << "'?\n";
      }
    }
    err << active->help();
    return kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  RunManifest manifest;
  manifest.subcommand = name;

  try {
    if (name == "train-indicator") {
      RunConfig config = detail::resolve_config(ti_common);
      if (ti_steps) config.indicator.steps = *ti_steps;
      if (!ti_pooling.empty()) config.indicator.pooling = parse_pooling(ti_pooling);
      config.validate();
      const auto examples = load_sentence_examples(ti_examples, config.corpus);
      IndicatorTrainingLog log;
      IndicatorModel model = train_indicator(examples, config.indicator, config.seed, &log);
      save_indicator(ti_out, config, model, log);
      out << json{{"examples", examples.size()}, {"best_step", log.best_step}, {"best_f1", log.best_f1}}.dump()
          << "\n";
      manifest.config = config_to_json(config);
      manifest.seed = config.seed;
      manifest.add_input(ti_examples);
      detail::emit_manifest(ti_common, manifest, start, fs::path(ti_out), err);
    } else if (name == "annotate") {
      RunConfig config = an_common.config_path.empty() ? config_from_json(read_json_file(fs::path(an_model) / "config.json"))
                                                      : detail::resolve_config(an_common);
      if (!an_common.tokenizer.empty()) config.corpus.tokenizer = parse_tokenize_mode(an_common.tokenizer);
      const IndicatorModel model = load_indicator(an_model);
      const auto cases = load_cases(an_cases, config.corpus);
      const auto annotations = annotate_corpus(cases, model, config.train.threads);
      std::vector<ElementAnnotation> ordered;
      for (const auto& [id, a] : annotations) ordered.push_back(a);
      write_text_file(an_out, to_jsonl(ordered, annotation_to_json));
      manifest.config = config_to_json(config);
      manifest.seed = config.seed;
      manifest.add_input(an_cases);
      manifest.add_input(an_model);
      detail::emit_manifest(an_common, manifest, start, std::nullopt, err);
    } else if (name == "build-contrastive") {
      RunConfig config = detail::resolve_config(bc_common);
      if (bc_l1) config.model.element_budget = *bc_l1;
      const auto cases = load_cases(bc_cases, config.corpus);
      const auto annotations = load_annotations(bc_elements, cases);
      std::vector<ElementViewInstance> instances;
      std::uint64_t index = 0;
      for (const auto& [id, doc] : cases) {
        auto it = annotations.find(id);
        if (it == annotations.end()) throw IntegrityError("no element annotation for case '" + id + "'");
        TruncatedCase tc = truncate_front(doc, config.model.max_len);
        instances.push_back(build_element_positive(tc.document, clip_flags(it->second.flags, tc.dropped_sentences),
                                                   config.model.element_budget, mix_seed(config.seed, index++)));
      }
      write_text_file(bc_out, to_jsonl(instances, [](const ElementViewInstance& i) { return i.to_json(); }));
      manifest.config = config_to_json(config);
      manifest.seed = config.seed;
      manifest.add_input(bc_cases);
      manifest.add_input(bc_elements);
      detail::emit_manifest(bc_common, manifest, start, std::nullopt, err);
    } else if (name == "train") {
      RunConfig config = detail::resolve_config(tr_common);
      if (tr_steps) config.train.steps = *tr_steps;
      std::shared_ptr<const FixtureTable> fixture;
      if (!tr_embeddings.empty()) {
        config.model.encoder.kind = EncoderKind::fixture;
        config.model.encoder.fixture_path = tr_embeddings;
      }
      if (config.model.encoder.kind == EncoderKind::fixture) {
        fixture = std::make_shared<const FixtureTable>(load_fixture(config.model.encoder.fixture_path));
        config.model.encoder.dim = fixture->dim();
        config.model.matcher.dim = fixture->dim();
      }
      config.validate();
      if (config.train.use_element_view && tr_elements.empty()) {
        throw UsageError("train: --elements is required while the element view is enabled");
      }
      CorpusPaths paths;
      paths.cases = tr_cases;
      paths.train_triples = fs::path(tr_triples);
      if (!tr_validation.empty()) paths.validation_triples = fs::path(tr_validation);
      if (!tr_elements.empty()) paths.elements = fs::path(tr_elements);
      const Corpus corpus = load_corpus(paths, config.corpus);
      Trainer trainer(config.model, config.train, config.seed, corpus, fixture);
      trainer.run([&](const StepRecord& r) {
        const bool report = config.train.eval_every > 0 && r.step % config.train.eval_every == 0;
        if (report || r.step == config.train.steps) {
          err << "step " << r.step << " loss " << r.total << " (main " << r.main << ")\n";
        }
      });
      save_checkpoint(tr_out, config, trainer);
      json summary = {{"steps", trainer.steps_done()},
                      {"best_step", trainer.best_step()},
                      {"final_loss", trainer.loss_log().empty() ? 0.0 : trainer.loss_log().back().total},
                      {"best_validation_accuracy", nullptr}};
      if (auto acc = trainer.best_validation_accuracy()) summary["best_validation_accuracy"] = *acc;
      out << summary.dump() << "\n";
      manifest.config = config_to_json(config);
      manifest.seed = config.seed;
      for (const auto& p : {tr_cases, tr_triples, tr_validation, tr_elements, tr_common.config_path}) {
        if (!p.empty()) manifest.add_input(p);
      }
      if (fixture) manifest.add_input(config.model.encoder.fixture_path);
      detail::emit_manifest(tr_common, manifest, start, fs::path(tr_out), err);
    } else if (name == "eval") {
      LoadedModel loaded = load_model(ev_model, detail::maybe_fixture(ev_embeddings));
      CorpusPaths paths;
      paths.cases = ev_cases;
      paths.test_triples = fs::path(ev_triples);
      const Corpus corpus = load_corpus(paths, loaded.config.corpus);
      const MetricsReport report = evaluate_triples(loaded.model, corpus, corpus.test, loaded.config.train.threads);
      detail::write_or_print(ev_out, report.to_json().dump() + "\n", out);
      manifest.config = config_to_json(loaded.config);
      manifest.seed = loaded.config.seed;
      manifest.add_input(ev_model);
      manifest.add_input(ev_cases);
      manifest.add_input(ev_triples);
      detail::emit_manifest(ev_common, manifest, start, std::nullopt, err);
    } else if (name == "baseline") {
      RunConfig config = detail::resolve_config(bl_common);
      bl_params.validate();
      const BaselineMethod method = parse_baseline_method(bl_method);
      CorpusPaths paths;
      paths.cases = bl_cases;
      paths.test_triples = fs::path(bl_triples);
      const Corpus corpus = load_corpus(paths, config.corpus);
      if (corpus.test.empty()) throw DegenerateDataset("no triples to score");
      json report = evaluate_baseline(corpus.test, corpus, method, bl_params).to_json();
      report["method"] = bl_method;
      detail::write_or_print(bl_out, report.dump() + "\n", out);
      manifest.config = config_to_json(config);
      manifest.seed = config.seed;
      manifest.add_input(bl_cases);
      manifest.add_input(bl_triples);
      detail::emit_manifest(bl_common, manifest, start, std::nullopt, err);
    } else if (name == "rank") {
      const RankMethod method = parse_rank_method(rk_method);
      LoadedModel loaded = load_model(rk_model, detail::maybe_fixture(rk_embeddings));
      CorpusPaths paths;
      paths.cases = rk_cases;
      const Corpus corpus = load_corpus(paths, loaded.config.corpus);
      const PreferenceSet prefs = prefs_from_model(loaded.model, corpus, rk_query, detail::split_list(rk_candidates),
                                                   loaded.config.train.threads);
      detail::write_or_print(rk_out, rank(prefs, method).to_json().dump() + "\n", out);
      manifest.config = config_to_json(loaded.config);
      manifest.seed = loaded.config.seed;
      manifest.add_input(rk_model);
      manifest.add_input(rk_cases);
      detail::emit_manifest(rk_common, manifest, start, std::nullopt, err);
    } else if (name == "dump-attention") {
      if (da_triples.empty() && (da_query.empty() || da_cand.empty())) {
        throw UsageError("dump-attention: give --query and --cand, or --triples");
      }
      LoadedModel loaded = load_model(da_model, detail::maybe_fixture(da_embeddings));
      CorpusPaths paths;
      paths.cases = da_cases;
      if (!da_triples.empty()) paths.test_triples = fs::path(da_triples);
      const Corpus corpus = load_corpus(paths, loaded.config.corpus);
      std::vector<std::pair<std::string, std::string>> pairs;
      if (da_triples.empty()) {
        pairs.emplace_back(da_query, da_cand);
      } else {
        for (const Triple& t : corpus.test) {
          pairs.emplace_back(t.query_id, t.cand_b_id);
          pairs.emplace_back(t.query_id, t.cand_c_id);
        }
      }
      std::vector<json> reports(pairs.size());
      parallel_for(pairs.size(), loaded.config.train.threads, [&](std::size_t i) {
        reports[i] = detail::attention_report(loaded.model, corpus.at(pairs[i].first), corpus.at(pairs[i].second),
                                              da_top_k);
      });
      detail::write_or_print(da_out, to_jsonl(reports, [](const json& j) { return j; }), out);
      manifest.config = config_to_json(loaded.config);
      manifest.seed = loaded.config.seed;
      manifest.add_input(da_model);
      manifest.add_input(da_cases);
      detail::emit_manifest(da_common, manifest, start, std::nullopt, err);
    } else if (name == "gradcheck") {
      RunConfig config = detail::resolve_config(gc_common);
      gc.seed = config.seed;
      const GradcheckReport report = gradcheck_training_objective(gc);
      out << report.to_json().dump(1) << "\n";
      manifest.config = {{"d", gc.dim},
                         {"hidden", gc.rnn_hidden},
                         {"max_len", gc.max_len},
                         {"batch", gc.batch},
                         {"epsilon", gc.options.epsilon},
                         {"tolerance", gc.options.tolerance}};
      manifest.seed = gc.seed;
      detail::emit_manifest(gc_common, manifest, start, std::nullopt, err);
      if (!report.passed()) {
        err << "error: gradcheck failed, max relative error " << report.max_relative_error << "\n";
        return kContractFailure;
      }
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << chosen->help();
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kContractFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kContractFailure;
  }
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return dispatch(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace mvcl::cli
