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
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

/// Builds a scalar loss on the given tape from the parameters in the store.
using LossFunction = std::function<Var(Tape&, ParameterStore&)>;

struct GradcheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-6;
  /// Above this many coordinates a seeded uniform subsample is checked.
  std::size_t max_coordinates = 10000;
  std::uint64_t seed = 0;
  std::size_t report_worst = 10;
};

struct GradcheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradcheckReport {
  std::size_t total_coordinates = 0;
  std::size_t checked_coordinates = 0;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::vector<GradcheckEntry> worst;
  /// Coordinates where the one-sided slopes disagree: a kink (relu at 0, a
  /// max_pool tie) lies inside the probe. Excluded from max_relative_error.
  std::vector<GradcheckEntry> kinks;

  bool passed() const { return max_relative_error <= tolerance; }

  json to_json() const {
    auto entries = [](const std::vector<GradcheckEntry>& list) {
      json out = json::array();
      for (const auto& e : list) {
        out.push_back({{"parameter", e.parameter},
                       {"index", e.index},
                       {"analytic", e.analytic},
                       {"numeric", e.numeric},
                       {"relative_error", e.relative_error}});
      }
      return out;
    };
    return {{"total_coordinates", total_coordinates},
            {"checked_coordinates", checked_coordinates},
            {"max_relative_error", max_relative_error},
            {"tolerance", tolerance},
            {"passed", passed()},
            {"worst", entries(worst)},
            {"kinks", entries(kinks)}};
  }
};

namespace detail {

inline double evaluate_loss(const LossFunction& f, ParameterStore& store) {
  Tape tape(false);
  return f(tape, store).value().item();
}

}  // namespace detail

/// Compares reverse-mode gradients against central finite differences.
inline GradcheckReport gradcheck(const LossFunction& f, ParameterStore& store, const GradcheckOptions& options = {}) {
  GradcheckReport report;
  report.tolerance = options.tolerance;

  {
    Tape tape;
    Var loss = f(tape, store);
    tape.backward(loss);
  }

  std::vector<std::pair<std::string, std::size_t>> coords;
  for (const auto& [name, p] : store) {
    for (std::size_t i = 0; i < p.value.size(); ++i) coords.emplace_back(name, i);
  }
  report.total_coordinates = coords.size();
  if (coords.size() > options.max_coordinates) {
    Rng rng(options.seed);
    auto picked = rng.sample_without_replacement(coords.size(), options.max_coordinates);
    std::sort(picked.begin(), picked.end());
    std::vector<std::pair<std::string, std::size_t>> subset;
    subset.reserve(picked.size());
    for (std::size_t k : picked) subset.push_back(coords[k]);
    coords = std::move(subset);
  }
  report.checked_coordinates = coords.size();

  std::vector<GradcheckEntry> entries;
  const double eps = options.epsilon;
  for (const auto& [name, index] : coords) {
    Parameter& p = store.at(name);
    const double analytic = p.grad.size() == p.value.size() ? p.grad[index] : 0.0;
    const double original = p.value[index];
    p.value[index] = original + eps;
    const double up = detail::evaluate_loss(f, store);
    p.value[index] = original - eps;
    const double down = detail::evaluate_loss(f, store);
    p.value[index] = original;

    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
    GradcheckEntry entry{name, index, analytic, numeric, std::abs(analytic - numeric) / denom};
    if (entry.relative_error > options.tolerance) {
      const double mid = detail::evaluate_loss(f, store);
      const double forward = (up - mid) / eps;
      const double backward = (mid - down) / eps;
      const double spread = std::abs(forward - backward);
      // Smooth functions give spread ~ eps * |f''|; a kink gives O(jump).
      if (spread > 1e-3 * std::max({1.0, std::abs(forward), std::abs(backward)})) {
        report.kinks.push_back(entry);
        continue;
      }
    }
    entries.push_back(std::move(entry));
  }
  std::stable_sort(entries.begin(), entries.end(),
            [](const GradcheckEntry& a, const GradcheckEntry& b) { return a.relative_error > b.relative_error; });
  if (!entries.empty()) report.max_relative_error = entries.front().relative_error;
  entries.resize(std::min(entries.size(), options.report_worst));
  report.worst = std::move(entries);
  return report;
}

}  // namespace mvcl
