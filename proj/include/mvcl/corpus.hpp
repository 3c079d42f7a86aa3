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

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"

namespace mvcl {

enum class TokenizeMode { whitespace, character };

inline std::string to_string(TokenizeMode mode) {
  return mode == TokenizeMode::whitespace ? "whitespace" : "character";
}

inline TokenizeMode parse_tokenize_mode(std::string_view name) {
  if (name == "whitespace") return TokenizeMode::whitespace;
  if (name == "character") return TokenizeMode::character;
  throw ConfigError("unknown tokenizer '" + std::string(name) + "' (expected whitespace|character)");
}

/// Half-open token interval [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct CaseDocument {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Span> sentences;

  std::size_t token_count() const noexcept { return tokens.size(); }
  std::size_t sentence_count() const noexcept { return sentences.size(); }

  std::span<const std::string> sentence_tokens(std::size_t i) const {
    const Span& s = sentences.at(i);
    return std::span<const std::string>(tokens).subspan(s.begin, s.size());
  }
};

/// True iff `spans` are non-empty, ordered and exactly cover [0, count).
inline bool spans_partition(std::span<const Span> spans, std::size_t count) {
  std::size_t cursor = 0;
  for (const Span& s : spans) {
    if (s.begin != cursor || s.end <= s.begin) return false;
    cursor = s.end;
  }
  return cursor == count && count > 0;
}

inline void validate_case(const CaseDocument& doc) {
  if (doc.tokens.empty()) throw IntegrityError("case '" + doc.id + "' has no tokens");
  if (!spans_partition(doc.sentences, doc.tokens.size())) {
    throw IntegrityError("case '" + doc.id + "': sentence spans do not partition its tokens");
  }
}

/// y = 0: cand_b is more relevant to the query; y = 1: cand_c is.
struct Triple {
  std::string query_id;
  std::string cand_b_id;
  std::string cand_c_id;
  int label = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct ElementAnnotation {
  std::string case_id;
  std::vector<bool> flags;  // one per sentence; true = carries legal elements
};

struct SentenceExample {
  std::vector<std::string> tokens;
  int label = 0;
};

struct Corpus {
  std::map<std::string, CaseDocument> cases;
  std::vector<Triple> train;
  std::vector<Triple> validation;
  std::vector<Triple> test;
  std::map<std::string, ElementAnnotation> annotations;

  const CaseDocument& at(const std::string& id) const {
    auto it = cases.find(id);
    if (it == cases.end()) throw IntegrityError("unknown case id '" + id + "'");
    return it->second;
  }

  /// Ids of every case referenced by a training triple, sorted.
  std::vector<std::string> train_case_ids() const {
    std::set<std::string> ids;
    for (const Triple& t : train) {
      ids.insert(t.query_id);
      ids.insert(t.cand_b_id);
      ids.insert(t.cand_c_id);
    }
    return {ids.begin(), ids.end()};
  }
};

// ---------------------------------------------------------------------------
// Tokenization and segmentation

namespace detail {

inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation or invalid byte: one token per byte
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// U+3000 IDEOGRAPHIC SPACE
inline bool is_ideographic_space(std::string_view cp) { return cp == "\xE3\x80\x80"; }

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> tokens;
  if (mode == TokenizeMode::whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
      std::size_t start = i;
      while (i < text.size() && !detail::is_ascii_space(text[i])) ++i;
      if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t len = std::min(detail::utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
      std::string_view cp = text.substr(i, len);
      if (!(len == 1 && detail::is_ascii_space(cp[0])) && !detail::is_ideographic_space(cp)) {
        tokens.emplace_back(cp);
      }
      i += len;
    }
  }
  if (tokens.empty()) throw EmptyDocument();
  return tokens;
}

inline const std::set<std::string, std::less<>>& default_terminators() {
  static const std::set<std::string, std::less<>> terminators = {
      ".", "\xE3\x80\x82", "!", "?", "\xEF\xBC\x81", "\xEF\xBC\x9F", ";", "\xEF\xBC\x9B"};
  return terminators;
}

/// Splits after every terminator token; the last span always closes at the end.
inline std::vector<Span> segment_sentences(std::span<const std::string> tokens,
                                           const std::set<std::string, std::less<>>& terminators =
                                               default_terminators()) {
  if (tokens.empty()) throw EmptyDocument("cannot segment an empty token sequence");
  std::vector<Span> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (terminators.contains(tokens[i])) {
      spans.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < tokens.size()) spans.push_back({start, tokens.size()});
  return spans;
}

// ---------------------------------------------------------------------------
// Truncation and augmentation

/// Keeps the last min(size, limit) tokens.
inline std::vector<std::string> truncate_front(std::span<const std::string> tokens, std::size_t limit) {
  if (limit == 0) throw ContractError("truncate_front: limit must be >= 1");
  const std::size_t keep = std::min(tokens.size(), limit);
  return {tokens.end() - static_cast<std::ptrdiff_t>(keep), tokens.end()};
}

struct TruncatedCase {
  CaseDocument document;
  std::size_t dropped_sentences = 0;  // fully removed leading sentences
};

/// Front truncation with sentence spans re-clipped and re-indexed.
inline TruncatedCase truncate_front(const CaseDocument& doc, std::size_t limit) {
  if (limit == 0) throw ContractError("truncate_front: limit must be >= 1");
  TruncatedCase out;
  out.document.id = doc.id;
  out.document.tokens = truncate_front(std::span<const std::string>(doc.tokens), limit);
  const std::size_t offset = doc.tokens.size() - out.document.tokens.size();
  for (const Span& s : doc.sentences) {
    if (s.end <= offset) {
      ++out.dropped_sentences;
      continue;
    }
    out.document.sentences.push_back({std::max(s.begin, offset) - offset, s.end - offset});
  }
  return out;
}

/// Flags aligned with a truncated case.
inline std::vector<bool> clip_flags(const std::vector<bool>& flags, std::size_t dropped_sentences) {
  if (dropped_sentences >= flags.size()) return {};
  return {flags.begin() + static_cast<std::ptrdiff_t>(dropped_sentences), flags.end()};
}

/// Each triple followed by its candidate-swapped copy with the label flipped.
inline std::vector<Triple> augment_swap(std::span<const Triple> triples) {
  std::vector<Triple> out;
  out.reserve(triples.size() * 2);
  for (const Triple& t : triples) {
    out.push_back(t);
    out.push_back({t.query_id, t.cand_c_id, t.cand_b_id, 1 - t.label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

struct CorpusConfig {
  TokenizeMode tokenizer = TokenizeMode::character;
  std::set<std::string, std::less<>> terminators = default_terminators();
};

struct CorpusPaths {
  std::filesystem::path cases;
  std::optional<std::filesystem::path> train_triples;
  std::optional<std::filesystem::path> validation_triples;
  std::optional<std::filesystem::path> test_triples;
  std::optional<std::filesystem::path> elements;
};

inline CaseDocument parse_case_record(const json& record, const CorpusConfig& config) {
  CaseDocument doc;
  doc.id = require_field<std::string>(record, "id");
  if (record.contains("tokens")) {
    doc.tokens = require_field<std::vector<std::string>>(record, "tokens");
    if (doc.tokens.empty()) throw EmptyDocument("case '" + doc.id + "' has no tokens");
    if (record.contains("sentences")) {
      for (const auto& pair : record.at("sentences")) {
        auto bounds = pair.get<std::vector<std::size_t>>();
        if (bounds.size() != 2) throw IntegrityError("case '" + doc.id + "': sentence span must be [start, end]");
        doc.sentences.push_back({bounds[0], bounds[1]});
      }
    } else {
      doc.sentences = segment_sentences(doc.tokens, config.terminators);
    }
  } else {
    doc.tokens = tokenize(require_field<std::string>(record, "text"), config.tokenizer);
    doc.sentences = segment_sentences(doc.tokens, config.terminators);
  }
  validate_case(doc);
  return doc;
}

inline std::map<std::string, CaseDocument> load_cases(const std::filesystem::path& path,
                                                      const CorpusConfig& config) {
  std::map<std::string, CaseDocument> cases;
  for_each_jsonl(path, [&](std::size_t line, const json& record) {
    CaseDocument doc;
    try {
      doc = parse_case_record(record, config);
    } catch (const EmptyDocument& e) {
      throw ParseError(path.string(), line, e.what());
    }
    if (cases.contains(doc.id)) throw IntegrityError("duplicate case id '" + doc.id + "'");
    cases.emplace(doc.id, std::move(doc));
  });
  return cases;
}

inline void validate_triple(const Triple& t, const std::map<std::string, CaseDocument>& cases) {
  for (const std::string* id : {&t.query_id, &t.cand_b_id, &t.cand_c_id}) {
    if (!cases.contains(*id)) throw IntegrityError("triple references unknown case id '" + *id + "'");
  }
  if (t.query_id == t.cand_b_id || t.query_id == t.cand_c_id) {
    throw IntegrityError("triple query '" + t.query_id + "' repeats as a candidate");
  }
  if (t.label != 0 && t.label != 1) throw IntegrityError("triple label must be 0 or 1");
}

inline std::vector<Triple> load_triples(const std::filesystem::path& path,
                                        const std::map<std::string, CaseDocument>& cases) {
  std::vector<Triple> triples;
  for_each_jsonl(path, [&](std::size_t line, const json& record) {
    Triple t{require_field<std::string>(record, "query"), require_field<std::string>(record, "cand_b"),
             require_field<std::string>(record, "cand_c"), require_field<int>(record, "label")};
    if (t.label != 0 && t.label != 1) throw ParseError(path.string(), line, "label must be 0 or 1");
    validate_triple(t, cases);
    triples.push_back(std::move(t));
  });
  return triples;
}

inline void validate_annotation(const ElementAnnotation& a, const std::map<std::string, CaseDocument>& cases) {
  auto it = cases.find(a.case_id);
  if (it == cases.end()) throw IntegrityError("annotation for unknown case id '" + a.case_id + "'");
  if (a.flags.size() != it->second.sentence_count()) {
    throw IntegrityError("annotation for '" + a.case_id + "' has " + std::to_string(a.flags.size()) +
                         " flags but the case has " + std::to_string(it->second.sentence_count()) + " sentences");
  }
}

inline std::map<std::string, ElementAnnotation> load_annotations(const std::filesystem::path& path,
                                                                 const std::map<std::string, CaseDocument>& cases) {
  std::map<std::string, ElementAnnotation> annotations;
  for_each_jsonl(path, [&](std::size_t line, const json& record) {
    ElementAnnotation a;
    a.case_id = require_field<std::string>(record, "case_id");
    for (const auto& flag : record.at("flags")) {
      int v = flag.is_boolean() ? static_cast<int>(flag.get<bool>()) : flag.get<int>();
      if (v != 0 && v != 1) throw ParseError(path.string(), line, "flags must be 0 or 1");
      a.flags.push_back(v == 1);
    }
    validate_annotation(a, cases);
    annotations[a.case_id] = std::move(a);
  });
  return annotations;
}

inline std::vector<SentenceExample> load_sentence_examples(const std::filesystem::path& path,
                                                           const CorpusConfig& config) {
  std::vector<SentenceExample> examples;
  for_each_jsonl(path, [&](std::size_t line, const json& record) {
    SentenceExample ex;
    try {
      ex.tokens = tokenize(require_field<std::string>(record, "text"), config.tokenizer);
    } catch (const EmptyDocument& e) {
      throw ParseError(path.string(), line, e.what());
    }
    ex.label = require_field<int>(record, "label");
    if (ex.label != 0 && ex.label != 1) throw ParseError(path.string(), line, "label must be 0 or 1");
    examples.push_back(std::move(ex));
  });
  return examples;
}

inline Corpus load_corpus(const CorpusPaths& paths, const CorpusConfig& config) {
  Corpus corpus;
  corpus.cases = load_cases(paths.cases, config);
  if (paths.train_triples) corpus.train = load_triples(*paths.train_triples, corpus.cases);
  if (paths.validation_triples) corpus.validation = load_triples(*paths.validation_triples, corpus.cases);
  if (paths.test_triples) corpus.test = load_triples(*paths.test_triples, corpus.cases);
  if (paths.elements) corpus.annotations = load_annotations(*paths.elements, corpus.cases);

  const std::set<Triple> train(corpus.train.begin(), corpus.train.end());
  const std::set<Triple> validation(corpus.validation.begin(), corpus.validation.end());
  for (const Triple& t : corpus.test) {
    if (train.contains(t) || validation.contains(t)) {
      throw IntegrityError("triple (" + t.query_id + ", " + t.cand_b_id + ", " + t.cand_c_id +
                           ") appears in more than one split");
    }
  }
  for (const Triple& t : corpus.validation) {
    if (train.contains(t)) {
      throw IntegrityError("triple (" + t.query_id + ", " + t.cand_b_id + ", " + t.cand_c_id +
                           ") appears in more than one split");
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Writing

inline json case_to_json(const CaseDocument& doc) {
  json sentences = json::array();
  for (const Span& s : doc.sentences) sentences.push_back({s.begin, s.end});
  return {{"id", doc.id}, {"tokens", doc.tokens}, {"sentences", sentences}};
}

inline json triple_to_json(const Triple& t) {
  return {{"query", t.query_id}, {"cand_b", t.cand_b_id}, {"cand_c", t.cand_c_id}, {"label", t.label}};
}

inline json annotation_to_json(const ElementAnnotation& a) {
  json flags = json::array();
  for (bool f : a.flags) flags.push_back(f ? 1 : 0);
  return {{"case_id", a.case_id}, {"flags", flags}};
}

template <typename Range, typename ToJson>
std::string to_jsonl(const Range& items, ToJson&& to_json) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

}  // namespace mvcl
