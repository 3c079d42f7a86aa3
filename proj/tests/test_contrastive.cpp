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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mvcl/autodiff/gradcheck.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/encoder.hpp"
#include "test_support.hpp"

namespace mvcl {
namespace {

using Tokens = std::vector<std::string>;
using testing::random_matrix;

struct PoolFixture {
  explicit PoolFixture(std::size_t d, std::uint64_t seed = 1) : head(d, "pool") {
    Rng rng(seed);
    head.register_parameters(store, rng);
  }
  ParameterStore store;
  AttentionPoolHead head;
};

std::vector<double> relu_affine(const std::vector<double>& h, const Tensor& W, const Tensor& b) {
  std::vector<double> u(W.cols());
  for (std::size_t j = 0; j < W.cols(); ++j) {
    double a = b[j];
    for (std::size_t i = 0; i < h.size(); ++i) a += h[i] * W(i, j);
    u[j] = std::max(0.0, a);
  }
  return u;
}

TEST(AttentionPool, SingleRowReturnsItsProjection) {
  PoolFixture f(4);
  Rng rng(2);
  const Tensor h = random_matrix(rng, 1, 4);
  Tape tape(false);
  const Tensor out = f.head.pool(tape, f.store, tape.constant(h)).value();
  const auto u = relu_affine(h.row_values(0), f.store.at("pool.w").value, f.store.at("pool.b").value);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[j], u[j], 1e-15);
}

TEST(AttentionPool, IdenticalRowsReturnTheSharedProjection) {
  PoolFixture f(4);
  const Tensor h = Tensor::matrix(3, 4, {1, -1, 2, 0.5, 1, -1, 2, 0.5, 1, -1, 2, 0.5});
  Tape tape(false);
  Var weights;
  const Tensor out = f.head.pool(tape, f.store, tape.constant(h), &weights).value();
  const auto u = relu_affine(h.row_values(0), f.store.at("pool.w").value, f.store.at("pool.b").value);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[j], u[j], 1e-14);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(weights.value()[i], 1.0 / 3.0, 1e-15);
}

TEST(AttentionPool, MatchesHandEvaluation) {
  PoolFixture f(4, 3);
  Rng rng(4);
  const Tensor h = random_matrix(rng, 3, 4);
  const Tensor& W = f.store.at("pool.w").value;
  const Tensor& b = f.store.at("pool.b").value;
  const Tensor& uw = f.store.at("pool.u_w").value;
  std::vector<std::vector<double>> u;
  std::vector<double> score;
  for (std::size_t i = 0; i < 3; ++i) {
    u.push_back(relu_affine(h.row_values(i), W, b));
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += u[i][j] * uw[j];
    score.push_back(s);
  }
  double z = 0.0;
  for (double s : score) z += std::exp(s);
  std::vector<double> want(4, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) want[j] += std::exp(score[i]) / z * u[i][j];
  }
  Tape tape(false);
  const Tensor out = f.head.pool(tape, f.store, tape.constant(h)).value();
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[j], want[j], 1e-14);
}

TEST(AttentionPool, WeightsFormDistribution) {
  PoolFixture f(5);
  Rng rng(5);
  Tape tape(false);
  for (int trial = 0; trial < 1000; ++trial) {
    Var w;
    f.head.pool(tape, f.store, tape.constant(random_matrix(rng, 1 + rng.below(20), 5, -4, 4)), &w);
    double s = 0.0;
    for (double v : w.value().values()) {
      ASSERT_GE(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-9);
  }
}

// Row vectors whose pairwise cosine similarities are all equal to 0.5:
// e_0 + e_k for k = 1..n in (n + 1) dimensions.
std::vector<Tensor> equiangular(std::size_t n) {
  std::vector<Tensor> out;
  for (std::size_t k = 1; k <= n; ++k) {
    Tensor t({1, n + 1});
    t[0] = 1.0;
    t[k] = 1.0;
    out.push_back(t);
  }
  return out;
}

TEST(InfoNce, EqualSimilaritiesGiveLogKPlusOne) {
  for (std::size_t K : {1u, 2u, 6u, 14u}) {
    Tape tape(false);
    const auto rows = equiangular(K + 2);
    Var anchor = tape.constant(rows[0]);
    Var pos = tape.constant(rows[1]);
    std::vector<Var> negs;
    for (std::size_t k = 0; k < K; ++k) negs.push_back(tape.constant(rows[2 + k]));
    EXPECT_NEAR(info_nce(anchor, pos, negs, 0.1).value().item(), std::log(K + 1.0), 1e-9) << K;
  }
}

TEST(InfoNce, WorkedValue) {
  Tape tape(false);
  Var a = tape.constant(Tensor::row({1, 0})), p = tape.constant(Tensor::row({2, 0}));
  std::vector<Var> n = {tape.constant(Tensor::row({0, 3}))};
  EXPECT_NEAR(info_nce(a, p, n, 1.0).value().item(), std::log(1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(info_nce(a, p, n, 1.0).value().item(), 0.3133, 1e-4);
}

TEST(InfoNce, PerfectSeparationLimit) {
  Tape tape(false);
  Var a = tape.constant(Tensor::row({1, 0})), p = tape.constant(Tensor::row({1, 0}));
  std::vector<Var> n = {tape.constant(Tensor::row({-1, 0}))};
  EXPECT_LT(info_nce(a, p, n, 0.01).value().item(), 1e-80);
  EXPECT_THROW(info_nce(a, p, std::vector<Var>{}, 0.1), ContractError);
}

TEST(CaseView, EqualSimilaritiesOverBatch) {
  for (std::size_t N : {1u, 5u}) {
    Tape tape(false);
    const auto rows = equiangular(3 * N);
    std::vector<CaseViewItem> batch;
    for (std::size_t i = 0; i < N; ++i) {
      batch.push_back({tape.constant(rows[3 * i]), tape.constant(rows[3 * i + 1]), tape.constant(rows[3 * i + 2])});
    }
    const double K = 1.0 + 3.0 * static_cast<double>(N - 1);
    EXPECT_NEAR(case_view_loss(batch, 0.1).value().item(), std::log(K + 1.0), 1e-9);
  }
}

TEST(CaseView, HandEvaluatedTwoTripleBatch) {
  Tape tape(false);
  Rng rng(6);
  std::vector<Tensor> v;
  for (int i = 0; i < 6; ++i) v.push_back(random_matrix(rng, 1, 3));
  auto cos = [](const Tensor& x, const Tensor& y) {
    double xy = 0, xx = 0, yy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xy += x[i] * y[i];
      xx += x[i] * x[i];
      yy += y[i] * y[i];
    }
    return xy / std::sqrt(xx * yy);
  };
  const double tau = 0.5;
  auto term = [&](int a, int p, std::vector<int> negs) {
    double den = std::exp(cos(v[a], v[p]) / tau);
    const double num = den;
    for (int n : negs) den += std::exp(cos(v[a], v[n]) / tau);
    return -std::log(num / den);
  };
  const double want = 0.5 * (term(0, 1, {2, 3, 4, 5}) + term(3, 4, {5, 0, 1, 2}));
  std::vector<CaseViewItem> batch = {{tape.constant(v[0]), tape.constant(v[1]), tape.constant(v[2])},
                                     {tape.constant(v[3]), tape.constant(v[4]), tape.constant(v[5])}};
  EXPECT_NEAR(case_view_loss(batch, tau).value().item(), want, 1e-12);
}

TEST(ElementView, EqualSimilaritiesGiveLogTwoNMinusOne) {
  for (std::size_t N : {2u, 4u, 8u}) {
    Tape tape(false);
    const auto rows = equiangular(2 * N);
    std::vector<ElementViewPair> batch;
    for (std::size_t i = 0; i < N; ++i) batch.push_back({tape.constant(rows[2 * i]), tape.constant(rows[2 * i + 1])});
    EXPECT_NEAR(element_view_loss(batch, 0.1).value().item(), std::log(2.0 * N - 1.0), 1e-9);
  }
}

TEST(ElementView, OrthogonalTwoInstanceBatch) {
  Tape tape(false);
  // o1 . p1 = 1/sqrt(2); every other similarity with o1 is 0 or 1/sqrt(2).
  Var o1 = tape.constant(Tensor::row({1, 0, 0})), p1 = tape.constant(Tensor::row({1, 1, 0}));
  Var o2 = tape.constant(Tensor::row({0, 1, 0})), p2 = tape.constant(Tensor::row({0, 0, 1}));
  const double tau = 1.0, r = 1.0 / std::sqrt(2.0);
  // Anchor o1: pos cos(o1,p1)=r, negatives o2 (0) and p2 (0).
  const double l1 = -std::log(std::exp(r) / (std::exp(r) + 2.0));
  // Anchor o2: pos cos(o2,p2)=0, negatives o1 (0) and p1 (r).
  const double l2 = -std::log(1.0 / (1.0 + 1.0 + std::exp(r)));
  std::vector<ElementViewPair> batch = {{o1, p1}, {o2, p2}};
  EXPECT_NEAR(element_view_loss(batch, tau).value().item(), 0.5 * (l1 + l2), 1e-14);
  EXPECT_THROW(element_view_loss(std::vector<ElementViewPair>{{o1, p1}}, tau), ContractError);
}

TEST(Losses, ScaleInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tensor> v;
    for (int i = 0; i < 6; ++i) v.push_back(random_matrix(rng, 1, 4));
    const double c = rng.uniform(0.1, 10.0);
    auto scaled = [&](const Tensor& t) {
      Tensor s = t;
      for (double& x : s.values()) x *= c;
      return s;
    };
    Tape tape(false);
    std::vector<CaseViewItem> a = {{tape.constant(v[0]), tape.constant(v[1]), tape.constant(v[2])},
                                   {tape.constant(v[3]), tape.constant(v[4]), tape.constant(v[5])}};
    std::vector<CaseViewItem> b = {{tape.constant(scaled(v[0])), tape.constant(scaled(v[1])), tape.constant(scaled(v[2]))},
                                   {tape.constant(scaled(v[3])), tape.constant(scaled(v[4])), tape.constant(scaled(v[5]))}};
    EXPECT_NEAR(case_view_loss(a, 0.1).value().item(), case_view_loss(b, 0.1).value().item(), 1e-9);
    std::vector<ElementViewPair> e1 = {{a[0].anchor, a[0].positive}, {a[1].anchor, a[1].positive}};
    std::vector<ElementViewPair> e2 = {{b[0].anchor, b[0].positive}, {b[1].anchor, b[1].positive}};
    EXPECT_NEAR(element_view_loss(e1, 0.1).value().item(), element_view_loss(e2, 0.1).value().item(), 1e-9);
  }
}

TEST(Losses, DecreaseInPositiveSimilarity) {
  // The loss as a function of the positive similarity s with negatives fixed:
  // -log(e^{s/t} / (e^{s/t} + S)). Its central-difference slope must be negative.
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const double tau = rng.uniform(0.05, 2.0);
    const std::size_t K = 1 + rng.below(10);
    std::vector<double> negs(K);
    for (double& n : negs) n = rng.uniform(-1, 1);
    auto loss_at = [&](double s) {
      // Anchor e_0; positive at angle acos(s); each negative at its own angle
      // in a separate plane, so only the positive similarity moves.
      const std::size_t d = K + 2;
      Tape tape(false);
      Tensor a({1, d}), p({1, d});
      a[0] = 1.0;
      p[0] = s;
      p[1] = std::sqrt(1.0 - s * s);
      std::vector<Var> nv;
      for (std::size_t k = 0; k < K; ++k) {
        Tensor n({1, d});
        n[0] = negs[k];
        n[2 + k] = std::sqrt(1.0 - negs[k] * negs[k]);
        nv.push_back(tape.constant(n));
      }
      return info_nce(tape.constant(a), tape.constant(p), nv, tau).value().item();
    };
    const double s = rng.uniform(-0.9, 0.9), h = 1e-5;
    EXPECT_LT((loss_at(s + h) - loss_at(s - h)) / (2 * h), 0.0);
  }
}

CaseDocument doc_from_lengths(const std::vector<std::size_t>& lengths) {
  CaseDocument doc;
  doc.id = "d";
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    const std::size_t begin = doc.tokens.size();
    for (std::size_t k = 0; k < lengths[s]; ++k) doc.tokens.push_back("s" + std::to_string(s) + "_" + std::to_string(k));
    doc.sentences.push_back({begin, doc.tokens.size()});
  }
  return doc;
}

TEST(ElementPositive, ForcedSingleChoice) {
  const CaseDocument doc = doc_from_lengths({2, 3});
  const auto inst = build_element_positive(doc, {true, false}, 3, 1);
  EXPECT_EQ(inst.positive, (Tokens{"s0_0", "s0_1", "[DEL]", "[DEL]", "[DEL]"}));
  EXPECT_EQ(inst.deleted_total, 3u);
  EXPECT_FALSE(inst.degenerate);
}

TEST(ElementPositive, ForcedTruncation) {
  const CaseDocument doc = doc_from_lengths({2, 4});
  const auto inst = build_element_positive(doc, {true, false}, 2, 1);
  EXPECT_EQ(inst.positive, (Tokens{"s0_0", "s0_1", "[DEL]", "[DEL]", "s1_2", "s1_3"}));
  EXPECT_EQ(inst.deleted_lengths, (std::vector<std::size_t>{2}));
}

TEST(ElementPositive, AllElementSentencesIsDegenerate) {
  const CaseDocument doc = doc_from_lengths({2, 4});
  const auto inst = build_element_positive(doc, {true, true}, 5, 1);
  EXPECT_EQ(inst.positive, inst.original);
  EXPECT_TRUE(inst.degenerate);
  EXPECT_EQ(inst.deleted_total, 0u);
}

TEST(ElementPositive, MisalignedFlagsAreRejected) {
  EXPECT_THROW(build_element_positive(doc_from_lengths({2}), {true, false}, 1, 1), IntegrityError);
}

TEST(ElementPositive, InvariantsOnRandomInputs) {
  Rng rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> lengths(1 + rng.below(8));
    for (auto& l : lengths) l = 1 + rng.below(12);
    const CaseDocument doc = doc_from_lengths(lengths);
    std::vector<bool> flags(lengths.size());
    std::size_t non_element = 0;
    for (std::size_t s = 0; s < flags.size(); ++s) {
      flags[s] = rng.below(3) == 0;
      if (!flags[s]) non_element += lengths[s];
    }
    const std::size_t budget = rng.below(40);
    const auto inst = build_element_positive(doc, flags, budget, rng.next());
    ASSERT_EQ(inst.positive.size(), inst.original.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < inst.positive.size(); ++i) {
      if (inst.positive[i] == inst.original[i]) continue;
      ++diffs;
      ASSERT_EQ(inst.positive[i], "[DEL]");
      std::size_t s = 0;
      while (!(doc.sentences[s].begin <= i && i < doc.sentences[s].end)) ++s;
      ASSERT_FALSE(flags[s]);
    }
    ASSERT_EQ(diffs, std::min(budget, non_element));
    ASSERT_EQ(inst.deleted_total, std::min(budget, non_element));
    // Only the last drawn sentence may be partially masked.
    for (std::size_t k = 0; k + 1 < inst.deleted_sentences.size(); ++k) {
      ASSERT_EQ(inst.deleted_lengths[k], doc.sentences[inst.deleted_sentences[k]].size());
    }
  }
}

TEST(ElementPositive, SeededDrawIsDeterministicAndVaries) {
  const CaseDocument doc = doc_from_lengths({3, 3, 3, 3, 3, 3});
  const std::vector<bool> flags(6, false);
  EXPECT_EQ(build_element_positive(doc, flags, 3, 5).positive, build_element_positive(doc, flags, 3, 5).positive);
  std::set<std::size_t> first;
  for (std::uint64_t seed = 0; seed < 50; ++seed) first.insert(build_element_positive(doc, flags, 3, seed).deleted_sentences[0]);
  EXPECT_EQ(first.size(), 6u);
}

TEST(ContrastiveGradcheck, BothViewsThroughEncoderAndPooling) {
  Encoder encoder({EncoderKind::lookup_recurrent, 8, 0, 4, {}}, "encoder");
  AttentionPoolHead head(8, "pool");
  const std::vector<Tokens> docs = {{"a", "b", "c", "d"}, {"b", "c", "e"}, {"e", "a", "a"},
                                    {"d", "[DEL]", "[DEL]", "c"}, {"c", "d", "e", "f", "g"}, {"f", "g"}};
  const Vocabulary vocab = Vocabulary::build(docs);
  ParameterStore store;
  Rng rng(10);
  encoder.register_parameters(store, vocab.size(), rng);
  head.register_parameters(store, rng);
  const GradcheckReport report = gradcheck([&](Tape& t, ParameterStore& s) {
    std::vector<Var> p;
    for (const auto& d : docs) p.push_back(head.pool(t, s, encoder.encode(t, s, vocab, d)));
    std::vector<CaseViewItem> cv = {{p[0], p[1], p[2]}, {p[3], p[4], p[5]}};
    std::vector<ElementViewPair> ev = {{p[0], p[3]}, {p[4], p[5]}};
    return add(case_view_loss(cv, 0.1), element_view_loss(ev, 0.1));
  }, store);
  EXPECT_LE(report.max_relative_error, 1e-4);
}

}  // namespace
}  // namespace mvcl
