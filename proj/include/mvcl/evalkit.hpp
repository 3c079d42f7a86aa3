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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvcl/corpus.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"

namespace mvcl {

/// Confusion matrix with class 1 as the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ContractError("predictions and labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1, y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && !y) ++c.tn;
    else ++c.fn;
  }
  return c;
}

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfusionCounts counts;

  json to_json() const {
    return {{"accuracy", accuracy},
            {"MaP", macro_precision},
            {"MaR", macro_recall},
            {"MaF", macro_f1},
            {"count", counts.total()},
            {"confusion", {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}}}};
  }
};

namespace detail {

inline double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace detail

inline MetricsReport metrics_from_counts(const ConfusionCounts& c) {
  if (c.total() == 0) throw ContractError("macro_metrics: empty input");
  // Class 1 sees (tp, fp, fn); class 0 sees (tn, fn, fp) in the same roles.
  const double p1 = detail::ratio(c.tp, c.tp + c.fp), r1 = detail::ratio(c.tp, c.tp + c.fn);
  const double p0 = detail::ratio(c.tn, c.tn + c.fn), r0 = detail::ratio(c.tn, c.tn + c.fp);
  MetricsReport m;
  m.counts = c;
  m.accuracy = detail::ratio(c.tp + c.tn, c.total());
  m.macro_precision = (p0 + p1) / 2.0;
  m.macro_recall = (r0 + r1) / 2.0;
  m.macro_f1 = (detail::harmonic(p0, r0) + detail::harmonic(p1, r1)) / 2.0;
  return m;
}

/// Accuracy plus precision/recall/F1 averaged (unweighted) over both classes.
inline MetricsReport macro_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (labels.empty()) throw ContractError("macro_metrics: empty input");
  return metrics_from_counts(confusion(predictions, labels));
}

/// F1 of class 1 alone.
inline double positive_f1(std::span<const int> predictions, std::span<const int> labels) {
  const ConfusionCounts c = confusion(predictions, labels);
  return detail::harmonic(detail::ratio(c.tp, c.tp + c.fp), detail::ratio(c.tp, c.tp + c.fn));
}

// ---------------------------------------------------------------------------
// Lexical baselines

struct CorpusStats {
  std::size_t documents = 0;
  double average_length = 0.0;
  std::map<std::string, std::size_t, std::less<>> document_frequency;

  template <typename Range>
  static CorpusStats build(const Range& token_sequences) {
    CorpusStats s;
    std::size_t total = 0;
    for (const auto& seq : token_sequences) {
      ++s.documents;
      total += seq.size();
      std::set<std::string_view> seen(seq.begin(), seq.end());
      for (std::string_view t : seen) ++s.document_frequency[std::string(t)];
    }
    if (s.documents > 0) s.average_length = static_cast<double>(total) / static_cast<double>(s.documents);
    return s;
  }

  static CorpusStats from_corpus(const Corpus& corpus) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.cases.size());
    for (const auto& [id, doc] : corpus.cases) docs.push_back(doc.tokens);
    return build(docs);
  }

  std::size_t df(std::string_view term) const {
    auto it = document_frequency.find(term);
    return it == document_frequency.end() ? 0 : it->second;
  }
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const {
    if (k1 < 0.0 || b < 0.0 || b > 1.0) throw ConfigError("bm25 requires k1 >= 0 and b in [0, 1]");
  }
};

namespace detail {

inline std::map<std::string_view, std::size_t> term_counts(std::span<const std::string> tokens) {
  std::map<std::string_view, std::size_t> tf;
  for (const auto& t : tokens) ++tf[t];
  return tf;
}

}  // namespace detail

/// Smoothed idf: ln((N + 1) / (df + 1)) + 1.
inline double tfidf_idf(const CorpusStats& stats, std::string_view term) {
  return std::log((static_cast<double>(stats.documents) + 1.0) / (static_cast<double>(stats.df(term)) + 1.0)) + 1.0;
}

/// Cosine similarity of raw-count tf x idf vectors.
inline double tfidf_score(std::span<const std::string> query, std::span<const std::string> doc,
                          const CorpusStats& stats) {
  const auto tq = detail::term_counts(query);
  const auto td = detail::term_counts(doc);
  double dot = 0.0, nq = 0.0, nd = 0.0;
  for (const auto& [term, count] : tq) {
    const double w = static_cast<double>(count) * tfidf_idf(stats, term);
    nq += w * w;
    if (auto it = td.find(term); it != td.end()) dot += w * static_cast<double>(it->second) * tfidf_idf(stats, term);
  }
  for (const auto& [term, count] : td) {
    const double w = static_cast<double>(count) * tfidf_idf(stats, term);
    nd += w * w;
  }
  if (nq == 0.0 || nd == 0.0) return 0.0;
  return dot / (std::sqrt(nq) * std::sqrt(nd));
}

/// Okapi idf: ln((N - df + 0.5) / (df + 0.5) + 1).
inline double bm25_idf(const CorpusStats& stats, std::string_view term) {
  const double n = static_cast<double>(stats.documents), df = static_cast<double>(stats.df(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

/// Okapi BM25 summed over the distinct query terms.
inline double bm25_score(std::span<const std::string> query, std::span<const std::string> doc,
                         const CorpusStats& stats, const Bm25Params& params = {}) {
  if (stats.average_length <= 0.0) throw ContractError("bm25_score: corpus average length unavailable");
  const auto td = detail::term_counts(doc);
  const double norm = 1.0 - params.b + params.b * static_cast<double>(doc.size()) / stats.average_length;
  std::set<std::string_view> terms(query.begin(), query.end());
  double score = 0.0;
  for (std::string_view term : terms) {
    auto it = td.find(term);
    if (it == td.end()) continue;
    const double tf = static_cast<double>(it->second);
    score += bm25_idf(stats, term) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
  }
  return score;
}

enum class BaselineMethod { tfidf, bm25 };

inline BaselineMethod parse_baseline_method(std::string_view name) {
  if (name == "tfidf") return BaselineMethod::tfidf;
  if (name == "bm25") return BaselineMethod::bm25;
  throw ConfigError("unknown baseline method '" + std::string(name) + "' (expected tfidf|bm25)");
}

/// 0 iff score(A, B) >= score(A, C); ties resolve to 0.
inline int baseline_classify(const Triple& triple, const Corpus& corpus, const CorpusStats& stats,
                             BaselineMethod method, const Bm25Params& params = {}) {
  const auto& a = corpus.at(triple.query_id).tokens;
  const auto& b = corpus.at(triple.cand_b_id).tokens;
  const auto& c = corpus.at(triple.cand_c_id).tokens;
  double sb = 0.0, sc = 0.0;
  if (method == BaselineMethod::tfidf) {
    sb = tfidf_score(a, b, stats);
    sc = tfidf_score(a, c, stats);
  } else {
    sb = bm25_score(a, b, stats, params);
    sc = bm25_score(a, c, stats, params);
  }
  return sc > sb ? 1 : 0;
}

inline MetricsReport evaluate_baseline(std::span<const Triple> triples, const Corpus& corpus, BaselineMethod method,
                                       const Bm25Params& params = {}) {
  const CorpusStats stats = CorpusStats::from_corpus(corpus);
  std::vector<int> predictions, labels;
  for (const Triple& t : triples) {
    predictions.push_back(baseline_classify(t, corpus, stats, method, params));
    labels.push_back(t.label);
  }
  return macro_metrics(predictions, labels);
}

}  // namespace mvcl
