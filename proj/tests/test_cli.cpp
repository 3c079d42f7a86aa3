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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mvcl/cli.hpp"
#include "mvcl/synthetic.hpp"
#include "test_support.hpp"

namespace mvcl {
namespace {

using Args = std::vector<std::string>;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(const Args& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

/// Unsets MVCL_SEED for the scope of a test and restores it afterwards.
class SeedEnv {
 public:
  explicit SeedEnv(const char* value) {
    if (const char* old = std::getenv("MVCL_SEED")) saved_ = old;
    if (value) ::setenv("MVCL_SEED", value, 1);
    else ::unsetenv("MVCL_SEED");
  }
  ~SeedEnv() {
    if (saved_) ::setenv("MVCL_SEED", saved_->c_str(), 1);
    else ::unsetenv("MVCL_SEED");
  }

 private:
  std::optional<std::string> saved_;
};

TEST(CliHelpers, EditDistanceAndSuggestion) {
  EXPECT_EQ(cli::edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(cli::edit_distance("", "abc"), 3u);
  EXPECT_EQ(cli::edit_distance("same", "same"), 0u);
  const std::vector<std::string> names = {"--steps", "--seed", "--cases", "--triples"};
  EXPECT_EQ(cli::suggest("--step", names).value(), "--steps");
  EXPECT_EQ(cli::suggest("--tripels", names).value(), "--triples");
  EXPECT_FALSE(cli::suggest("--zzzzzzzz", names).has_value());
}

TEST(CliHelpers, Sha256KnownVector) {
  testing::TempDir dir;
  write_text_file(dir / "abc.txt", "abc");
  EXPECT_EQ(cli::sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_THROW(cli::sha256_file(dir / "missing"), DataError);
}

TEST(CliUsage, VersionAndMissingSubcommand) {
  const CliRun v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_TRUE(contains(v.out, std::string(cli::kVersion)));
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

TEST(CliUsage, EverySubcommandHasHelp) {
  for (const char* sub : {"train-indicator", "annotate", "build-contrastive", "train", "eval", "baseline", "rank",
                          "dump-attention", "gradcheck"}) {
    const CliRun r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_TRUE(contains(r.out, "--seed")) << sub;
    EXPECT_TRUE(contains(r.out, "--config")) << sub;
  }
}

TEST(CliUsage, MissingRequiredOptionPrintsUsage) {
  const CliRun r = run({"eval", "--cases", "x.jsonl", "--triples", "y.jsonl"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "--model"));
  EXPECT_TRUE(contains(r.err, "Usage"));
}

TEST(CliUsage, UnknownFlagGetsSuggestion) {
  const CliRun r = run({"train", "--cases", "c", "--triples", "t", "--out", "o", "--step", "5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "did you mean '--steps'")) << r.err;
}

TEST(CliUsage, MissingConfigFileIsAUsageError) {
  const CliRun r = run({"train", "--config", "/nonexistent/missing.json", "--cases", "c", "--triples", "t", "--out",
                     "o"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "config file not found"));
}

TEST(CliUsage, InvalidSeedEnvironmentIsAUsageError) {
  SeedEnv env("abc");
  const CliRun r = run({"baseline", "--method", "bm25", "--cases", "c", "--triples", "t"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "MVCL_SEED"));
}

TEST(CliUsage, UnknownConfigKeyIsAUsageError) {
  testing::TempDir dir;
  write_text_file(dir / "config.json", R"({"train": {"stpes": 3}})");
  const CliRun r = run({"train", "--config", (dir / "config.json").string(), "--cases", "c", "--triples", "t", "--out",
                     "o"});
  EXPECT_EQ(r.code, 1);
}

TEST(CliGradcheck, PassesAtDeskScale) {
  const CliRun r = run({"gradcheck", "--d", "8", "--seed", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LE(j.at("max_relative_error").get<double>(), 1e-4);
  EXPECT_TRUE(contains(r.err, "manifest: "));
}

TEST(CliGradcheck, ImpossibleToleranceFailsWithContractCode) {
  const CliRun r = run({"gradcheck", "--d", "4", "--hidden", "2", "--max-len", "6", "--tolerance", "0"});
  EXPECT_EQ(r.code, 3);
}

/// Synthetic data on disk plus one trained checkpoint, shared by the suite.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    SyntheticConfig sc;
    sc.train_triples = 10;
    sc.validation_triples = 4;
    sc.test_triples = 5;
    sc.seed = 3;
    data_ = new SyntheticCorpus(make_loan_corpus(sc));
    write_synthetic(dir_->path(), *data_);
    const json config = {{"encoder", {{"dim", 8}, {"recurrent_hidden", 4}}},
                         {"matcher", {{"rnn_hidden", 4}, {"mlp_hidden", 8}}},
                         {"model", {{"element_budget", 6}}},
                         {"train", {{"steps", 12}, {"batch_size", 4}, {"eval_every", 4}, {"threads", 1}}},
                         {"indicator", {{"steps", 60}, {"encoder", {{"dim", 8}, {"recurrent_hidden", 4}}}}}};
    write_json_file(path("config.json"), config);
    const CliRun r = run({"train", "--config", path("config.json"), "--tokenizer", "whitespace", "--cases",
                       path("cases.jsonl"), "--triples", path("train.jsonl"), "--validation",
                       path("validation.jsonl"), "--elements", path("elements.jsonl"), "--out", path("ckpt")});
    train_code_ = r.code;
    train_run_ = new CliRun(r);
  }
  static void TearDownTestSuite() {
    delete train_run_;
    delete data_;
    delete dir_;
  }

  static std::string path(const std::string& name) { return (dir_->path() / name).string(); }

  static testing::TempDir* dir_;
  static SyntheticCorpus* data_;
  static CliRun* train_run_;
  static int train_code_;
};

testing::TempDir* CliPipeline::dir_ = nullptr;
SyntheticCorpus* CliPipeline::data_ = nullptr;
CliRun* CliPipeline::train_run_ = nullptr;
int CliPipeline::train_code_ = -1;

TEST_F(CliPipeline, TrainWritesCheckpointSummaryAndManifest) {
  ASSERT_EQ(train_code_, 0) << train_run_->err;
  for (const char* f : {"config.json", "vocab.json", "params.json", "state.json", "loss_log.jsonl", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_->path() / "ckpt" / f)) << f;
  }
  const json summary = json::parse(train_run_->out);
  EXPECT_EQ(summary.at("steps").get<std::size_t>(), 12u);
  EXPECT_TRUE(contains(train_run_->err, "step 4 loss"));
  const json manifest = read_json_file(dir_->path() / "ckpt" / "manifest.json");
  EXPECT_EQ(manifest.at("subcommand"), "train");
  EXPECT_EQ(manifest.at("tool_version"), std::string(cli::kVersion));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 1u);
  EXPECT_EQ(manifest.at("inputs").at(path("cases.jsonl")), cli::sha256_file(path("cases.jsonl")));
  EXPECT_EQ(manifest.at("config").at("train").at("steps").get<std::size_t>(), 12u);
  EXPECT_GE(manifest.at("duration_seconds").get<double>(), 0.0);
}

TEST_F(CliPipeline, TrainRequiresElementsWhenTheElementViewIsOn) {
  const CliRun r = run({"train", "--config", path("config.json"), "--tokenizer", "whitespace", "--cases",
                     path("cases.jsonl"), "--triples", path("train.jsonl"), "--out", path("no_elements")});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "--elements"));
}

TEST_F(CliPipeline, SeedPrecedence) {
  auto seed_of = [&](const Args& extra, const char* env, const std::string& config) {
    SeedEnv scope(env);
    Args args = {"baseline", "--method", "tfidf", "--tokenizer", "whitespace", "--cases", path("cases.jsonl"),
                 "--triples", path("test.jsonl"), "--manifest", path("seed_manifest.json")};
    if (!config.empty()) {
      args.push_back("--config");
      args.push_back(config);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    const CliRun r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return read_json_file(path("seed_manifest.json")).at("seed").get<std::uint64_t>();
  };
  write_text_file(path("seeded.json"), R"({"seed": 42})");
  EXPECT_EQ(seed_of({}, nullptr, ""), 1u);
  EXPECT_EQ(seed_of({}, "7", ""), 7u);
  EXPECT_EQ(seed_of({}, "7", path("seeded.json")), 42u);
  EXPECT_EQ(seed_of({"--seed", "99"}, "7", path("seeded.json")), 99u);
}

TEST_F(CliPipeline, EvalReportsMetrics) {
  ASSERT_EQ(train_code_, 0);
  const CliRun r = run({"eval", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--triples", path("test.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  for (const char* k : {"accuracy", "MaP", "MaR", "MaF"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("count").get<std::size_t>(), 5u);
  EXPECT_TRUE(contains(r.err, "manifest: "));
}

TEST_F(CliPipeline, RankOrdersCandidates) {
  ASSERT_EQ(train_code_, 0);
  const Triple& t = data_->corpus.test.front();
  const Triple& other = data_->corpus.test.back();
  const std::string cands = t.cand_b_id + "," + t.cand_c_id + "," + other.cand_b_id;
  for (const char* method : {"exhaustive", "wincount", "probsum"}) {
    const CliRun r = run({"rank", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--query", t.query_id,
                       "--candidates", cands, "--method", method});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("method"), method);
    auto order = j.at("order").get<std::vector<std::string>>();
    std::sort(order.begin(), order.end());
    std::vector<std::string> want = {t.cand_b_id, t.cand_c_id, other.cand_b_id};
    std::sort(want.begin(), want.end());
    EXPECT_EQ(order, want);
    EXPECT_EQ(j.at("scores").size(), 3u);
  }
  const CliRun bad = run({"rank", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--query", t.query_id,
                       "--candidates", t.query_id + "," + t.cand_b_id});
  EXPECT_EQ(bad.code, 3);
  const CliRun method = run({"rank", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--query", t.query_id,
                          "--candidates", cands, "--method", "kemeny"});
  EXPECT_EQ(method.code, 1);
}

TEST_F(CliPipeline, DumpAttention) {
  ASSERT_EQ(train_code_, 0);
  const Triple& t = data_->corpus.test.front();
  const CliRun one = run({"dump-attention", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--query",
                       t.query_id, "--cand", t.cand_b_id, "--top-k", "3"});
  ASSERT_EQ(one.code, 0) << one.err;
  const json j = json::parse(one.out);
  EXPECT_EQ(j.at("query_id"), t.query_id);
  ASSERT_EQ(j.at("top_query_tokens").size(), 3u);
  const auto& q = data_->corpus.at(t.query_id);
  for (const auto& entry : j.at("top_query_tokens")) {
    EXPECT_EQ(entry.at("token"), q.tokens.at(entry.at("index").get<std::size_t>()));
  }
  EXPECT_GE(j.at("top_query_tokens")[0].at("weight").get<double>(), j.at("top_query_tokens")[1].at("weight").get<double>());

  const CliRun all = run({"dump-attention", "--model", path("ckpt"), "--cases", path("cases.jsonl"), "--triples",
                       path("test.jsonl"), "--out", path("attention.jsonl")});
  ASSERT_EQ(all.code, 0) << all.err;
  std::size_t lines = 0;
  for_each_jsonl(dir_->path() / "attention.jsonl", [&](std::size_t, const json&) { ++lines; });
  EXPECT_EQ(lines, 2 * data_->corpus.test.size());
  EXPECT_EQ(run({"dump-attention", "--model", path("ckpt"), "--cases", path("cases.jsonl")}).code, 1);
}

TEST_F(CliPipeline, Baselines) {
  for (const char* method : {"tfidf", "bm25"}) {
    const CliRun r = run({"baseline", "--method", method, "--tokenizer", "whitespace", "--cases", path("cases.jsonl"),
                       "--triples", path("test.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("method"), method);
    EXPECT_TRUE(j.contains("MaF"));
  }
  EXPECT_EQ(run({"baseline", "--method", "lsi", "--cases", path("cases.jsonl"), "--triples", path("test.jsonl")}).code,
            1);
  EXPECT_EQ(run({"baseline", "--method", "bm25", "--b", "2", "--cases", path("cases.jsonl"), "--triples",
                 path("test.jsonl")})
                .code,
            1);
}

TEST_F(CliPipeline, DataErrorsExitWithTwo) {
  write_text_file(path("broken.jsonl"), "{\"id\": \"x\", \"text\": \"a b\"}\n{not json\n");
  const CliRun r = run({"baseline", "--method", "bm25", "--cases", path("broken.jsonl"), "--triples", path("test.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "broken.jsonl:2")) << r.err;
  EXPECT_EQ(run({"eval", "--model", path("missing_ckpt"), "--cases", path("cases.jsonl"), "--triples",
                 path("test.jsonl")})
                .code,
            2);
  EXPECT_EQ(run({"baseline", "--method", "bm25", "--cases", path("nope.jsonl"), "--triples", path("test.jsonl")}).code,
            2);
}

TEST_F(CliPipeline, IndicatorAnnotateAndContrastiveInstances) {
  const CliRun ti = run({"train-indicator", "--config", path("config.json"), "--tokenizer", "whitespace", "--examples",
                      path("sentence_examples.jsonl"), "--out", path("indicator")});
  ASSERT_EQ(ti.code, 0) << ti.err;
  EXPECT_TRUE(json::parse(ti.out).contains("best_f1"));
  EXPECT_TRUE(std::filesystem::exists(dir_->path() / "indicator" / "manifest.json"));

  const CliRun an = run({"annotate", "--cases", path("cases.jsonl"), "--model", path("indicator"), "--out",
                      path("predicted_elements.jsonl")});
  ASSERT_EQ(an.code, 0) << an.err;
  std::map<std::string, std::size_t> flag_counts;
  for_each_jsonl(dir_->path() / "predicted_elements.jsonl", [&](std::size_t, const json& j) {
    flag_counts[j.at("case_id").get<std::string>()] = j.at("flags").size();
  });
  ASSERT_EQ(flag_counts.size(), data_->corpus.cases.size());
  for (const auto& [id, doc] : data_->corpus.cases) EXPECT_EQ(flag_counts.at(id), doc.sentence_count()) << id;
  const CliRun again = run({"annotate", "--cases", path("cases.jsonl"), "--model", path("indicator"), "--out",
                         path("predicted_again.jsonl")});
  ASSERT_EQ(again.code, 0);
  std::ifstream a(path("predicted_elements.jsonl")), b(path("predicted_again.jsonl"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());

  const CliRun bc = run({"build-contrastive", "--tokenizer", "whitespace", "--cases", path("cases.jsonl"), "--elements",
                      path("elements.jsonl"), "--l1", "5", "--out", path("instances.jsonl")});
  ASSERT_EQ(bc.code, 0) << bc.err;
  std::size_t n = 0;
  for_each_jsonl(dir_->path() / "instances.jsonl", [&](std::size_t, const json& j) {
    const auto& doc = data_->corpus.at(j.at("case_id").get<std::string>());
    ++n;
    EXPECT_EQ(j.at("positive_tokens").size(), doc.token_count());
  });
  EXPECT_EQ(n, data_->corpus.cases.size());
}

}  // namespace
}  // namespace mvcl
