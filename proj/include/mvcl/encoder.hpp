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
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/recurrent.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

using TokenId = std::size_t;

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kDelToken = "[DEL]";

/// 64-bit FNV-1a; stable across platforms and runs.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Token to id map with four reserved ids and optional hash buckets for
/// out-of-vocabulary tokens. Layout: [reserved | known tokens | buckets].
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kDel = 3;
  static constexpr std::size_t kReserved = 4;

  explicit Vocabulary(std::size_t hash_buckets = 0) : hash_buckets_(hash_buckets) {}

  /// Known tokens are assigned ids in sorted order so the mapping does not
  /// depend on insertion order.
  template <typename Range>
  static Vocabulary build(const Range& token_sequences, std::size_t hash_buckets = 0) {
    std::set<std::string, std::less<>> unique;
    for (const auto& seq : token_sequences) {
      for (const auto& tok : seq) {
        if (!is_reserved(tok)) unique.insert(std::string(tok));
      }
    }
    Vocabulary v(hash_buckets);
    for (const auto& tok : unique) v.ids_.emplace(tok, kReserved + v.ids_.size());
    return v;
  }

  static bool is_reserved(std::string_view token) {
    return token == kPadToken || token == kUnkToken || token == kClsToken || token == kDelToken;
  }

  TokenId id(std::string_view token) const {
    if (token == kPadToken) return kPad;
    if (token == kUnkToken) return kUnk;
    if (token == kClsToken) return kCls;
    if (token == kDelToken) return kDel;
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    if (hash_buckets_ == 0) return kUnk;
    return kReserved + ids_.size() + static_cast<TokenId>(fnv1a(token) % hash_buckets_);
  }

  std::vector<TokenId> ids(std::span<const std::string> tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  bool contains(std::string_view token) const { return is_reserved(token) || ids_.find(token) != ids_.end(); }
  std::size_t known_count() const noexcept { return ids_.size(); }
  std::size_t hash_buckets() const noexcept { return hash_buckets_; }
  std::size_t size() const noexcept { return kReserved + ids_.size() + hash_buckets_; }

  json to_json() const {
    std::vector<std::string> tokens(ids_.size());
    for (const auto& [tok, id] : ids_) tokens[id - kReserved] = tok;
    return {{"hash_buckets", hash_buckets_}, {"tokens", tokens}};
  }

  static Vocabulary from_json(const json& in) {
    Vocabulary v(in.at("hash_buckets").get<std::size_t>());
    for (const auto& tok : in.at("tokens")) v.ids_.emplace(tok.get<std::string>(), kReserved + v.ids_.size());
    return v;
  }

 private:
  std::map<std::string, TokenId, std::less<>> ids_;
  std::size_t hash_buckets_;
};

enum class EncoderKind { lookup, lookup_recurrent, fixture };

inline std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::lookup: return "lookup";
    case EncoderKind::lookup_recurrent: return "lookup_recurrent";
    case EncoderKind::fixture: return "fixture";
  }
  return "?";
}

inline EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "lookup") return EncoderKind::lookup;
  if (name == "lookup_recurrent") return EncoderKind::lookup_recurrent;
  if (name == "fixture") return EncoderKind::fixture;
  throw ConfigError("unknown encoder kind '" + std::string(name) + "'");
}

struct EncoderConfig {
  EncoderKind kind = EncoderKind::lookup_recurrent;
  std::size_t dim = 64;
  std::size_t hash_buckets = 0;
  std::size_t recurrent_hidden = 32;
  std::string fixture_path;

  void validate() const {
    if (dim < 2) throw ConfigError("encoder.dim must be >= 2");
    if (kind == EncoderKind::lookup_recurrent && recurrent_hidden < 1) {
      throw ConfigError("encoder.recurrent_hidden must be >= 1");
    }
    if (kind == EncoderKind::fixture && fixture_path.empty()) {
      throw ConfigError("encoder.kind 'fixture' requires encoder.fixture_path");
    }
  }
};

/// Externally computed per-token vectors, keyed by case id.
class FixtureTable {
 public:
  std::size_t dim() const noexcept { return dim_; }
  bool contains(const std::string& id) const { return rows_.contains(id); }
  std::size_t size() const noexcept { return rows_.size(); }

  const Tensor& at(const std::string& id) const {
    auto it = rows_.find(id);
    if (it == rows_.end()) throw FixtureMiss("no fixture embeddings for case '" + id + "'");
    return it->second;
  }

  void insert(const std::string& id, Tensor vectors) {
    if (rows_.empty()) dim_ = vectors.cols();
    if (vectors.cols() != dim_) {
      throw FormatError("fixture '" + id + "' has dimension " + std::to_string(vectors.cols()) + ", expected " +
                        std::to_string(dim_));
    }
    rows_[id] = std::move(vectors);
  }

 private:
  std::map<std::string, Tensor> rows_;
  std::size_t dim_ = 0;
};

/// Reads embeddings.jsonl: {"id": string, "vectors": [[real x d] x token_count]}.
inline FixtureTable load_fixture(const std::filesystem::path& path) {
  FixtureTable table;
  for_each_jsonl(path, [&](std::size_t line, const json& record) {
    const auto id = require_field<std::string>(record, "id");
    const auto vectors = require_field<std::vector<std::vector<double>>>(record, "vectors");
    if (vectors.empty() || vectors.front().empty()) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": fixture '" + id + "' has no vectors");
    }
    const std::size_t d = vectors.front().size();
    std::vector<double> flat;
    flat.reserve(vectors.size() * d);
    for (const auto& row : vectors) {
      if (row.size() != d) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": ragged vectors in fixture '" + id + "'");
      }
      flat.insert(flat.end(), row.begin(), row.end());
    }
    table.insert(id, Tensor::matrix(vectors.size(), d, std::move(flat)));
  });
  return table;
}

/// Token sequence -> per-token representations (n x dim), plus one leading
/// [CLS] row when `cls_framing` is requested.
///
/// lookup: embedding rows. lookup_recurrent: embeddings through one
/// bidirectional LSTM, directions concatenated and projected back to dim.
/// fixture: vectors served verbatim from the table (the last n rows, matching
/// front truncation); [DEL] and [CLS] positions use trainable rows.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderConfig config, std::string prefix) : config_(std::move(config)), prefix_(std::move(prefix)) {
    config_.validate();
    if (config_.kind == EncoderKind::lookup_recurrent) {
      rnn_ = BidirectionalRecurrent(prefix_ + ".rnn", CellKind::lstm, config_.dim, config_.recurrent_hidden);
    }
  }

  const EncoderConfig& config() const noexcept { return config_; }
  const std::string& prefix() const noexcept { return prefix_; }

  void register_parameters(ParameterStore& store, std::size_t vocab_size, Rng& rng) const {
    if (config_.kind == EncoderKind::fixture) {
      store.add_uniform(prefix_ + ".del", {1, config_.dim}, 1, rng);
      store.add_uniform(prefix_ + ".cls", {1, config_.dim}, 1, rng);
      return;
    }
    store.add_uniform(prefix_ + ".embedding", {vocab_size, config_.dim}, 1, rng);
    if (config_.kind == EncoderKind::lookup_recurrent) {
      rnn_.register_parameters(store, rng);
      store.add_uniform(prefix_ + ".proj.w", {2 * config_.recurrent_hidden, config_.dim}, 2 * config_.recurrent_hidden,
                        rng);
      store.add_uniform(prefix_ + ".proj.b", {1, config_.dim}, 2 * config_.recurrent_hidden, rng);
    }
  }

  Var encode(Tape& tape, ParameterStore& store, const Vocabulary& vocab, std::span<const std::string> tokens,
             bool cls_framing = false, const FixtureTable* fixture = nullptr, const std::string& case_id = {}) const {
    if (tokens.empty()) throw EmptyDocument("encode: empty token sequence");
    if (config_.kind == EncoderKind::fixture) return encode_fixture(tape, store, tokens, cls_framing, fixture, case_id);

    std::vector<TokenId> ids;
    ids.reserve(tokens.size() + 1);
    if (cls_framing) ids.push_back(Vocabulary::kCls);
    for (const auto& t : tokens) ids.push_back(vocab.id(t));
    Var x = gather_rows(tape.parameter(store, prefix_ + ".embedding"), ids);
    if (config_.kind == EncoderKind::lookup) return x;
    Var states = rnn_.forward(tape, store, x);
    return affine(states, tape.parameter(store, prefix_ + ".proj.w"), tape.parameter(store, prefix_ + ".proj.b"));
  }

 private:
  Var encode_fixture(Tape& tape, ParameterStore& store, std::span<const std::string> tokens, bool cls_framing,
                     const FixtureTable* fixture, const std::string& case_id) const {
    if (fixture == nullptr) throw FixtureMiss("fixture encoder used without a fixture table");
    const Tensor& all = fixture->at(case_id);
    if (all.cols() != config_.dim) {
      throw FormatError("fixture dimension " + std::to_string(all.cols()) + " does not match encoder.dim " +
                        std::to_string(config_.dim));
    }
    const std::size_t n = tokens.size();
    if (all.rows() < n) {
      throw FormatError("fixture for '" + case_id + "' has " + std::to_string(all.rows()) + " rows for " +
                        std::to_string(n) + " tokens");
    }
    const std::size_t offset = all.rows() - n;
    const std::size_t d = config_.dim;
    Tensor base({n, d});
    Tensor mask({n, 1});
    bool any_del = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (tokens[i] == kDelToken) {
        mask[i] = 1.0;
        any_del = true;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) base(i, j) = all(offset + i, j);
    }
    Var rows = tape.constant(std::move(base));
    if (any_del) rows = add(rows, matmul(tape.constant(std::move(mask)), tape.parameter(store, prefix_ + ".del")));
    if (cls_framing) rows = concat({tape.parameter(store, prefix_ + ".cls"), rows}, 0);
    return rows;
  }

  EncoderConfig config_;
  std::string prefix_;
  BidirectionalRecurrent rnn_;
};

}  // namespace mvcl
