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

// Seeded toy loan-dispute corpora.
//
// Every case carries one element sentence stating an interest rate. Rates
// fall in two classes (ordinary and usurious) and relevance is decided by the
// rate class alone. The less relevant candidate is a near-copy of the query
// that differs only in its rate, so lexical overlap points the wrong way.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mvcl/corpus.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

struct SyntheticConfig {
  std::size_t train_triples = 32;
  std::size_t validation_triples = 0;
  std::size_t test_triples = 0;
  std::size_t filler_sentences = 2;  // non-element sentences per case, plus 0 or 1 extra
  std::size_t filler_length = 4;     // words per filler sentence, before the full stop
  double same_rate_fraction = 0.5;   // positives repeating the query's exact rate token
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Corpus corpus;  // annotations hold the gold element flags
  std::vector<SentenceExample> sentences;
  std::map<std::string, std::string> texts;  // case id -> whitespace-joined text
};

namespace detail {

inline constexpr std::array<std::string_view, 4> kOrdinaryRates = {"6%", "8%", "10%", "12%"};
inline constexpr std::array<std::string_view, 4> kUsuriousRates = {"36%", "40%", "48%", "60%"};
inline constexpr std::array<std::string_view, 12> kNames = {"zhang", "wang", "li",  "zhao", "chen", "liu",
                                                            "yang",  "huang", "zhou", "wu",  "xu",   "sun"};
inline constexpr std::array<std::string_view, 6> kAmounts = {"5000", "10000", "20000", "50000", "80000", "120000"};
inline constexpr std::array<std::string_view, 6> kYears = {"2013", "2014", "2015", "2016", "2017", "2018"};
inline constexpr std::array<std::string_view, 24> kFiller = {
    "plaintiff", "defendant", "court",   "urged",   "repay",    "payment", "refused", "contract",
    "signed",    "witness",   "hearing", "claimed", "evidence", "debt",    "overdue", "agreed",
    "transfer",  "account",   "bank",    "later",   "promised", "failed",  "notice",  "returned"};

struct LoanFacts {
  std::string lender;
  std::string borrower;
  std::string amount;
  std::string year;
  std::string rate;
  std::vector<std::vector<std::string>> filler;
  std::size_t element_position = 0;  // sentence index of the rate statement
};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& options) {
  return std::string(options[rng.below(N)]);
}

inline std::string pick_rate(Rng& rng, int rate_class) {
  return rate_class == 0 ? pick(rng, kOrdinaryRates) : pick(rng, kUsuriousRates);
}

inline LoanFacts random_facts(Rng& rng, int rate_class, const SyntheticConfig& config) {
  LoanFacts f;
  f.lender = pick(rng, kNames);
  do {
    f.borrower = pick(rng, kNames);
  } while (f.borrower == f.lender);
  f.amount = pick(rng, kAmounts);
  f.year = pick(rng, kYears);
  f.rate = pick_rate(rng, rate_class);
  const std::size_t count = config.filler_sentences + rng.below(2);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<std::string> words;
    for (std::size_t w = 0; w < config.filler_length; ++w) words.push_back(pick(rng, kFiller));
    f.filler.push_back(std::move(words));
  }
  f.element_position = rng.below(count + 1);
  return f;
}

inline CaseDocument render_case(const std::string& id, const LoanFacts& f, std::vector<bool>& flags) {
  CaseDocument doc;
  doc.id = id;
  auto emit = [&](std::vector<std::string> words, bool element) {
    const std::size_t begin = doc.tokens.size();
    for (auto& w : words) doc.tokens.push_back(std::move(w));
    doc.tokens.emplace_back(".");
    doc.sentences.push_back({begin, doc.tokens.size()});
    flags.push_back(element);
  };
  for (std::size_t s = 0; s <= f.filler.size(); ++s) {
    if (s == f.element_position) {
      emit({"in", f.year, f.borrower, "borrowed", f.amount, "from", f.lender, "at", f.rate, "interest"}, true);
    }
    if (s < f.filler.size()) emit(f.filler[s], false);
  }
  return doc;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace detail

inline SyntheticCorpus make_loan_corpus(const SyntheticConfig& config) {
  SyntheticCorpus out;
  Rng rng(mix_seed(config.seed, 0x10a4));
  std::size_t next_id = 0;

  auto add_case = [&](const detail::LoanFacts& facts) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%05zu", next_id++);
    std::vector<bool> flags;
    CaseDocument doc = detail::render_case(buf, facts, flags);
    for (std::size_t s = 0; s < doc.sentence_count(); ++s) {
      auto span = doc.sentence_tokens(s);
      out.sentences.push_back({{span.begin(), span.end()}, flags[s] ? 1 : 0});
    }
    out.texts[doc.id] = detail::join_tokens(doc.tokens);
    out.corpus.annotations[doc.id] = {doc.id, flags};
    const std::string id = doc.id;
    out.corpus.cases.emplace(id, std::move(doc));
    return id;
  };

  auto make_triple = [&]() {
    const int rate_class = static_cast<int>(rng.below(2));
    const detail::LoanFacts query = detail::random_facts(rng, rate_class, config);
    detail::LoanFacts twin = query;
    twin.rate = detail::pick_rate(rng, 1 - rate_class);
    detail::LoanFacts relevant = detail::random_facts(rng, rate_class, config);
    if (rng.uniform() < config.same_rate_fraction) relevant.rate = query.rate;

    Triple t;
    t.query_id = add_case(query);
    const std::string pos = add_case(relevant);
    const std::string neg = add_case(twin);
    t.label = static_cast<int>(rng.below(2));
    t.cand_b_id = t.label == 0 ? pos : neg;
    t.cand_c_id = t.label == 0 ? neg : pos;
    return t;
  };

  for (std::size_t i = 0; i < config.train_triples; ++i) out.corpus.train.push_back(make_triple());
  for (std::size_t i = 0; i < config.validation_triples; ++i) out.corpus.validation.push_back(make_triple());
  for (std::size_t i = 0; i < config.test_triples; ++i) out.corpus.test.push_back(make_triple());
  return out;
}

/// Random filler sentences labelled 1 iff they contain `marker`.
inline std::vector<SentenceExample> make_marker_sentences(std::size_t count, std::uint64_t seed,
                                                          std::string_view marker = "ELEM") {
  Rng rng(mix_seed(seed, 0x5e7));
  std::vector<SentenceExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SentenceExample ex;
    const std::size_t length = 3 + rng.below(6);
    for (std::size_t w = 0; w < length; ++w) ex.tokens.push_back(detail::pick(rng, detail::kFiller));
    ex.label = static_cast<int>(i % 2);
    if (ex.label == 1) ex.tokens[rng.below(length)] = std::string(marker);
    out.push_back(std::move(ex));
  }
  rng.shuffle(out);
  return out;
}

/// Writes cases (as whitespace text), triple splits, gold elements and
/// sentence examples as JSONL under `dir`.
inline void write_synthetic(const std::filesystem::path& dir, const SyntheticCorpus& data) {
  std::string cases;
  for (const auto& [id, text] : data.texts) cases += json{{"id", id}, {"text", text}}.dump() + "\n";
  write_text_file(dir / "cases.jsonl", cases);
  write_text_file(dir / "train.jsonl", to_jsonl(data.corpus.train, triple_to_json));
  if (!data.corpus.validation.empty()) {
    write_text_file(dir / "validation.jsonl", to_jsonl(data.corpus.validation, triple_to_json));
  }
  if (!data.corpus.test.empty()) write_text_file(dir / "test.jsonl", to_jsonl(data.corpus.test, triple_to_json));
  std::vector<ElementAnnotation> annotations;
  for (const auto& [id, a] : data.corpus.annotations) annotations.push_back(a);
  write_text_file(dir / "elements.jsonl", to_jsonl(annotations, annotation_to_json));
  write_text_file(dir / "sentence_examples.jsonl",
                  to_jsonl(data.sentences, [](const SentenceExample& ex) {
                    return json{{"text", detail::join_tokens(ex.tokens)}, {"label", ex.label}};
                  }));
}

}  // namespace mvcl
