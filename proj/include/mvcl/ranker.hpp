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

// Pairwise preferences -> ranked candidate lists.
//
// A pair (i before j) is satisfied iff p(i, j) > 0.5; a pair at exactly 0.5
// satisfies neither order. Every tie is broken by ascending candidate id, so
// the output never depends on the order candidates were supplied in.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"

namespace mvcl {

class PreferenceSet {
 public:
  explicit PreferenceSet(std::vector<std::string> candidates) : ids_(std::move(candidates)) {
    std::sort(ids_.begin(), ids_.end());
    if (ids_.size() < 2) throw ContractError("a preference set needs at least two candidates");
    if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
      throw ContractError("duplicate candidate id in preference set");
    }
  }

  /// Sets p(i, j) = p and p(j, i) = 1 - p.
  void set(const std::string& i, const std::string& j, double p) {
    if (i == j) throw ContractError("p(i, i) is undefined");
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("preference probability must lie in [0, 1]");
    require(i);
    require(j);
    probs_[{i, j}] = p;
    probs_[{j, i}] = 1.0 - p;
  }

  double p(const std::string& i, const std::string& j) const {
    auto it = probs_.find({i, j});
    if (it == probs_.end()) throw ContractError("no preference recorded for (" + i + ", " + j + ")");
    return it->second;
  }

  bool prefers(const std::string& i, const std::string& j) const { return p(i, j) > 0.5; }

  /// Sorted candidate ids.
  const std::vector<std::string>& candidates() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }

  void require_complete() const {
    if (probs_.size() != ids_.size() * (ids_.size() - 1)) throw ContractError("preference set is incomplete");
  }

 private:
  void require(const std::string& id) const {
    if (!std::binary_search(ids_.begin(), ids_.end(), id)) throw ContractError("unknown candidate '" + id + "'");
  }

  std::vector<std::string> ids_;
  std::map<std::pair<std::string, std::string>, double> probs_;
};

struct RankedList {
  std::vector<std::string> order;  // best first
  std::string method;
  double score = 0.0;                    // method-level: satisfied-pair fraction
  std::map<std::string, double> scores;  // per candidate

  json to_json() const { return {{"order", order}, {"scores", scores}, {"method", method}, {"score", score}}; }
};

/// Number of pairs (order[a], order[b]), a < b, with p > 0.5.
inline std::size_t satisfied_pairs(const PreferenceSet& prefs, const std::vector<std::string>& order) {
  std::size_t count = 0;
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) count += prefs.prefers(order[a], order[b]) ? 1 : 0;
  }
  return count;
}

namespace detail {

inline double pair_fraction(const PreferenceSet& prefs, const std::vector<std::string>& order) {
  const double pairs = static_cast<double>(order.size() * (order.size() - 1) / 2);
  return static_cast<double>(satisfied_pairs(prefs, order)) / pairs;
}

inline RankedList rank_by_score(const PreferenceSet& prefs, std::map<std::string, double> scores, std::string method) {
  RankedList out;
  out.order = prefs.candidates();
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](const std::string& a, const std::string& b) { return scores.at(a) > scores.at(b); });
  out.method = std::move(method);
  out.scores = std::move(scores);
  out.score = pair_fraction(prefs, out.order);
  return out;
}

}  // namespace detail

inline constexpr std::size_t kExhaustiveLimit = 8;

/// The order satisfying the most pairwise preferences, searched over all n!
/// orders; the lexicographically smallest id sequence wins ties.
inline RankedList exhaustive_rank(const PreferenceSet& prefs) {
  prefs.require_complete();
  if (prefs.size() > kExhaustiveLimit) {
    throw SizeGuard("exhaustive_rank is limited to " + std::to_string(kExhaustiveLimit) + " candidates (got " +
                    std::to_string(prefs.size()) + "); use wincount_rank instead");
  }
  std::vector<std::string> order = prefs.candidates();
  std::vector<std::string> best = order;
  std::size_t best_count = satisfied_pairs(prefs, order);
  while (std::next_permutation(order.begin(), order.end())) {
    const std::size_t count = satisfied_pairs(prefs, order);
    if (count > best_count) {
      best_count = count;
      best = order;
    }
  }
  RankedList out;
  out.order = best;
  out.method = "exhaustive";
  out.score = detail::pair_fraction(prefs, best);
  for (std::size_t a = 0; a < best.size(); ++a) {
    double won = 0.0;
    for (std::size_t b = a + 1; b < best.size(); ++b) won += prefs.prefers(best[a], best[b]) ? 1.0 : 0.0;
    out.scores[best[a]] = won;
  }
  return out;
}

/// Candidates sorted by the number of opponents they are preferred over.
inline RankedList wincount_rank(const PreferenceSet& prefs) {
  prefs.require_complete();
  std::map<std::string, double> wins;
  for (const auto& i : prefs.candidates()) {
    double w = 0.0;
    for (const auto& j : prefs.candidates()) {
      if (i != j && prefs.prefers(i, j)) w += 1.0;
    }
    wins[i] = w;
  }
  return detail::rank_by_score(prefs, std::move(wins), "wincount");
}

/// Candidates sorted by the sum of their pairwise preference probabilities.
inline RankedList probsum_rank(const PreferenceSet& prefs) {
  prefs.require_complete();
  std::map<std::string, double> sums;
  for (const auto& i : prefs.candidates()) {
    double s = 0.0;
    for (const auto& j : prefs.candidates()) {
      if (i != j) s += prefs.p(i, j);
    }
    sums[i] = s;
  }
  return detail::rank_by_score(prefs, std::move(sums), "probsum");
}

enum class RankMethod { exhaustive, wincount, probsum };

inline RankMethod parse_rank_method(std::string_view name) {
  if (name == "exhaustive") return RankMethod::exhaustive;
  if (name == "wincount") return RankMethod::wincount;
  if (name == "probsum") return RankMethod::probsum;
  throw ConfigError("unknown rank method '" + std::string(name) + "' (expected exhaustive|wincount|probsum)");
}

inline RankedList rank(const PreferenceSet& prefs, RankMethod method) {
  switch (method) {
    case RankMethod::exhaustive: return exhaustive_rank(prefs);
    case RankMethod::wincount: return wincount_rank(prefs);
    case RankMethod::probsum: return probsum_rank(prefs);
  }
  throw ContractError("unknown rank method");
}

}  // namespace mvcl
