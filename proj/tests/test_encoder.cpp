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

#include <cmath>
#include <string>
#include <vector>

#include "mvcl/autodiff/gradcheck.hpp"
#include "mvcl/autodiff/ops.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/recurrent.hpp"
#include "test_support.hpp"

namespace mvcl {
namespace {

using Tokens = std::vector<std::string>;
using testing::random_matrix;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step recurrence written directly from the gate equations, over
// plain arrays. Gate blocks: lstm (i, f, c~, o); gru (r, z, n).
std::vector<std::vector<double>> reference_scan(const Tensor& pre, const Tensor& W, const Tensor& b, CellKind kind,
                                                bool reverse) {
  const std::size_t n = pre.rows(), h = W.rows();
  std::vector<std::vector<double>> out(n, std::vector<double>(h));
  std::vector<double> hp(h, 0.0), cp(h, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    auto rec = [&](std::size_t g) {
      double a = b[g];
      for (std::size_t k = 0; k < h; ++k) a += hp[k] * W(k, g);
      return a;
    };
    std::vector<double> hn(h), cn(h);
    for (std::size_t k = 0; k < h; ++k) {
      if (kind == CellKind::lstm) {
        const double i = logistic(pre(t, k) + rec(k));
        const double f = logistic(pre(t, h + k) + rec(h + k));
        const double g = std::tanh(pre(t, 2 * h + k) + rec(2 * h + k));
        const double o = logistic(pre(t, 3 * h + k) + rec(3 * h + k));
        cn[k] = f * cp[k] + i * g;
        hn[k] = o * std::tanh(cn[k]);
      } else {
        const double r = logistic(pre(t, k) + rec(k));
        const double z = logistic(pre(t, h + k) + rec(h + k));
        const double nn = std::tanh(pre(t, 2 * h + k) + r * rec(2 * h + k));
        hn[k] = (1.0 - z) * nn + z * hp[k];
      }
    }
    hp = hn;
    cp = cn;
    out[t] = hn;
  }
  return out;
}

class RecurrentOracle : public ::testing::TestWithParam<std::tuple<CellKind, bool>> {};

TEST_P(RecurrentOracle, MatchesHandRolledRecurrence) {
  const auto [kind, reverse] = GetParam();
  Rng rng(31);
  const std::size_t h = 4, G = gate_count(kind) * h;
  const Tensor pre = random_matrix(rng, 3, G), W = random_matrix(rng, h, G), b = random_matrix(rng, 1, G);
  Tape tape(false);
  const Tensor got = recurrent_scan(tape.constant(pre), tape.constant(W), tape.constant(b), kind, reverse).value();
  const auto want = reference_scan(pre, W, b, kind, reverse);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t k = 0; k < h; ++k) EXPECT_NEAR(got(t, k), want[t][k], 1e-14);
  }
}

TEST_P(RecurrentOracle, GradientsMatchFiniteDifferences) {
  const auto [kind, reverse] = GetParam();
  Rng rng(32);
  const std::size_t h = 3, G = gate_count(kind) * h;
  ParameterStore store;
  store.add("pre", random_matrix(rng, 4, G));
  store.add("w", random_matrix(rng, h, G));
  store.add("b", random_matrix(rng, 1, G));
  const Tensor weights = random_matrix(rng, 4, h);
  const GradcheckReport report = gradcheck([&, kind = kind, reverse = reverse](Tape& t, ParameterStore& s) {
    Var y = recurrent_scan(t.parameter(s, "pre"), t.parameter(s, "w"), t.parameter(s, "b"), kind, reverse);
    return sum(mul(y, t.constant(weights)));
  }, store);
  EXPECT_LE(report.max_relative_error, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Cells, RecurrentOracle,
                         ::testing::Combine(::testing::Values(CellKind::lstm, CellKind::gru), ::testing::Bool()));

TEST(Recurrent, ZeroWeightsGiveZeroStates) {
  for (CellKind kind : {CellKind::lstm, CellKind::gru}) {
    const std::size_t h = 3, G = gate_count(kind) * h;
    Tape tape(false);
    const Tensor y =
        recurrent_scan(tape.constant(Tensor({5, G})), tape.constant(Tensor({h, G})), tape.constant(Tensor({1, G})),
                       kind, false)
            .value();
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Recurrent, SingleStepIsDirectionFree) {
  Rng rng(33);
  for (CellKind kind : {CellKind::lstm, CellKind::gru}) {
    const std::size_t h = 3, G = gate_count(kind) * h;
    const Tensor pre = random_matrix(rng, 1, G), W = random_matrix(rng, h, G), b = random_matrix(rng, 1, G);
    Tape tape(false);
    const Tensor fw = recurrent_scan(tape.constant(pre), tape.constant(W), tape.constant(b), kind, false).value();
    const Tensor bw = recurrent_scan(tape.constant(pre), tape.constant(W), tape.constant(b), kind, true).value();
    for (std::size_t k = 0; k < h; ++k) EXPECT_EQ(fw(0, k), bw(0, k));
  }
}

TEST(Vocabulary, ReservedIdsAreDistinctAndStable) {
  const Vocabulary v = Vocabulary::build(std::vector<Tokens>{{"b", "a", "[DEL]"}});
  EXPECT_EQ(v.id("[PAD]"), 0u);
  EXPECT_EQ(v.id("[UNK]"), 1u);
  EXPECT_EQ(v.id("[CLS]"), 2u);
  EXPECT_EQ(v.id("[DEL]"), 3u);
  EXPECT_EQ(v.id("a"), 4u);
  EXPECT_EQ(v.id("b"), 5u);
  EXPECT_EQ(v.id("zzz"), Vocabulary::kUnk);
  EXPECT_EQ(v.size(), 6u);
}

TEST(Vocabulary, HashBucketsAreStable) {
  const Vocabulary v = Vocabulary::build(std::vector<Tokens>{{"a"}}, 16);
  const auto first = v.id("unseen-token");
  EXPECT_GE(first, 5u);
  EXPECT_LT(first, 5u + 16u);
  EXPECT_EQ(Vocabulary::from_json(v.to_json()).id("unseen-token"), first);
  EXPECT_EQ(fnv1a("abc"), 0xe71fa2190541574bULL);
}

TEST(Vocabulary, JsonRoundTrip) {
  const Vocabulary v = Vocabulary::build(std::vector<Tokens>{{"x", "y", "z"}}, 3);
  const Vocabulary w = Vocabulary::from_json(json::parse(v.to_json().dump()));
  for (const char* t : {"x", "y", "z", "[DEL]", "q"}) EXPECT_EQ(v.id(t), w.id(t));
}

struct EncoderFixture {
  EncoderFixture(EncoderKind kind, std::size_t dim, std::uint64_t seed = 1) : encoder({kind, dim, 0, 3, {}}, "enc") {
    vocab = Vocabulary::build(std::vector<Tokens>{{"a", "b", "c", "d", "e"}});
    Rng rng(seed);
    encoder.register_parameters(store, vocab.size(), rng);
  }
  Tensor encode(const Tokens& tokens, bool cls = false) {
    Tape tape(false);
    return encoder.encode(tape, store, vocab, tokens, cls).value();
  }
  Vocabulary vocab;
  ParameterStore store;
  Encoder encoder;
};

TEST(Encoder, LookupShape) {
  EncoderFixture f(EncoderKind::lookup, 8);
  const Tensor h = f.encode({"a", "b", "c", "d", "e"});
  EXPECT_EQ(h.rows(), 5u);
  EXPECT_EQ(h.cols(), 8u);
}

TEST(Encoder, LookupIsContextFree) {
  EncoderFixture f(EncoderKind::lookup, 8);
  const Tensor h = f.encode({"a", "b", "a"});
  EXPECT_EQ(h.row_values(0), h.row_values(2));
}

TEST(Encoder, RecurrentIsContextSensitive) {
  EncoderFixture f(EncoderKind::lookup_recurrent, 8);
  const Tensor h = f.encode({"a", "b", "a"});
  EXPECT_NE(h.row_values(0), h.row_values(2));
  EXPECT_EQ(h.rows(), 3u);
  EXPECT_EQ(h.cols(), 8u);
}

TEST(Encoder, ClsFramingAddsOneRow) {
  for (EncoderKind kind : {EncoderKind::lookup, EncoderKind::lookup_recurrent}) {
    EncoderFixture f(kind, 6);
    EXPECT_EQ(f.encode({"a", "b"}, true).rows(), 3u);
    EXPECT_EQ(f.encode({"a", "b"}, false).rows(), 2u);
  }
}

TEST(Encoder, DelMaskChangesEncoding) {
  for (EncoderKind kind : {EncoderKind::lookup, EncoderKind::lookup_recurrent}) {
    EncoderFixture f(kind, 6);
    const Tensor plain = f.encode({"a", "b", "c"});
    const Tensor masked = f.encode({"a", "[DEL]", "[DEL]"});
    EXPECT_NE(plain.row_values(1), masked.row_values(1));
    EXPECT_EQ(f.encode({"[DEL]", "[DEL]"}).row_values(0), f.encode({"[DEL]", "[DEL]"}).row_values(0));
  }
}

TEST(Encoder, EmptyInputIsRejected) {
  EncoderFixture f(EncoderKind::lookup, 4);
  EXPECT_THROW(f.encode({}), EmptyDocument);
}

TEST(Encoder, RecurrentEncoderGradcheck) {
  EncoderFixture f(EncoderKind::lookup_recurrent, 6, 7);
  Rng rng(8);
  const Tensor w = random_matrix(rng, 4, 6);
  const Tokens tokens = {"a", "c", "[DEL]", "b"};
  const GradcheckReport report = gradcheck([&](Tape& t, ParameterStore& s) {
    return sum(mul(tanh(f.encoder.encode(t, s, f.vocab, tokens)), t.constant(w)));
  }, f.store);
  EXPECT_LE(report.max_relative_error, 1e-6);
}

TEST(Encoder, ConfigValidation) {
  EXPECT_THROW(EncoderConfig({EncoderKind::lookup, 1, 0, 3, {}}).validate(), ConfigError);
  EXPECT_THROW(EncoderConfig({EncoderKind::fixture, 4, 0, 3, {}}).validate(), ConfigError);
}

class FixtureFiles : public ::testing::Test {
 protected:
  testing::TempDir dir_;
};

TEST_F(FixtureFiles, LoadsAndServesVerbatim) {
  write_text_file(dir_ / "e.jsonl",
                  R"({"id": "A", "vectors": [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]]})"
                  "\n");
  const FixtureTable table = load_fixture(dir_ / "e.jsonl");
  EXPECT_EQ(table.dim(), 4u);
  EXPECT_EQ(table.at("A").rows(), 3u);

  Encoder enc({EncoderKind::fixture, 4, 0, 1, (dir_ / "e.jsonl").string()}, "enc");
  ParameterStore store;
  Rng rng(1);
  enc.register_parameters(store, 0, rng);
  Tape tape(false);
  const Tensor h = enc.encode(tape, store, Vocabulary{}, Tokens{"x", "y", "z"}, false, &table, "A").value();
  EXPECT_EQ(h.row_values(2), (std::vector<double>{9, 10, 11, 12}));
  // Front-truncated input is served from the trailing rows.
  const Tensor tail = enc.encode(tape, store, Vocabulary{}, Tokens{"y", "z"}, false, &table, "A").value();
  EXPECT_EQ(tail.row_values(0), (std::vector<double>{5, 6, 7, 8}));
  const Tensor del = enc.encode(tape, store, Vocabulary{}, Tokens{"x", "[DEL]", "z"}, false, &table, "A").value();
  EXPECT_EQ(del.row_values(1), store.at("enc.del").value.row_values(0));
  EXPECT_THROW(enc.encode(tape, store, Vocabulary{}, Tokens{"x"}, false, &table, "B"), FixtureMiss);
}

TEST_F(FixtureFiles, RaggedRowsAreFormatError) {
  write_text_file(dir_ / "e.jsonl", R"({"id": "A", "vectors": [[1, 2], [3]]})"
                                    "\n");
  EXPECT_THROW(load_fixture(dir_ / "e.jsonl"), FormatError);
}

TEST_F(FixtureFiles, DimensionMismatchAcrossRecordsIsFormatError) {
  write_text_file(dir_ / "e.jsonl", R"({"id": "A", "vectors": [[1, 2]]})"
                                    "\n"
                                    R"({"id": "B", "vectors": [[1, 2, 3]]})"
                                    "\n");
  EXPECT_THROW(load_fixture(dir_ / "e.jsonl"), FormatError);
}

}  // namespace
}  // namespace mvcl
