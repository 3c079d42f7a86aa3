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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvcl/autodiff/tensor.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
};

/// Named trainable tensors plus their Adam state. Iteration order is the
/// lexicographic name order, which fixes serialization and update order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor init) {
    if (params_.contains(name)) throw ContractError("parameter '" + name + "' registered twice");
    Parameter p;
    p.grad = Tensor::zeros_like(init);
    p.first_moment = Tensor::zeros_like(init);
    p.second_moment = Tensor::zeros_like(init);
    p.value = std::move(init);
    return params_.emplace(name, std::move(p)).first->second;
  }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Parameter& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return add(name, std::move(t));
  }

  Parameter& add_zeros(const std::string& name, Shape shape) { return add(name, Tensor(std::move(shape))); }

  bool contains(const std::string& name) const { return params_.contains(name); }

  Parameter& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }

  const Tensor& value(const std::string& name) const { return at(name).value; }

  /// Overwrites a value; the shape is fixed at registration.
  void assign(const std::string& name, Tensor value) {
    Parameter& p = at(name);
    if (p.value.shape() != value.shape()) {
      throw ShapeError("parameter '" + name + "': shape " + to_string(p.value.shape()) + " cannot take " +
                       to_string(value.shape()));
    }
    p.value = std::move(value);
  }

  void zero_grad() {
    for (auto& [name, p] : params_) {
      for (double& g : p.grad.values()) g = 0.0;
    }
  }

  std::size_t coordinate_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p.value.size();
    return n;
  }

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  json to_json(bool with_optimizer_state) const {
    json out = json::object();
    for (const auto& [name, p] : params_) {
      json entry = {{"shape", p.value.shape()}, {"values", p.value.data()}};
      if (with_optimizer_state) {
        entry["m"] = p.first_moment.data();
        entry["v"] = p.second_moment.data();
        entry["step"] = p.step;
      }
      out[name] = std::move(entry);
    }
    return out;
  }

  /// Loads values (and optimizer state when present) into the already
  /// registered parameters. Names and shapes must match exactly.
  void load_json(const json& in) {
    if (!in.is_object()) throw FormatError("parameter file must be a JSON object");
    for (const auto& [name, p] : params_) {
      if (!in.contains(name)) throw FormatError("parameter '" + name + "' missing from checkpoint");
    }
    for (const auto& [name, entry] : in.items()) {
      auto it = params_.find(name);
      if (it == params_.end()) throw FormatError("checkpoint has unknown parameter '" + name + "'");
      Parameter& p = it->second;
      Shape shape = entry.at("shape").get<Shape>();
      if (shape != p.value.shape()) {
        throw FormatError("parameter '" + name + "': checkpoint shape " + to_string(shape) +
                          " does not match model shape " + to_string(p.value.shape()));
      }
      p.value = Tensor(shape, entry.at("values").get<std::vector<double>>());
      if (entry.contains("m")) {
        p.first_moment = Tensor(shape, entry.at("m").get<std::vector<double>>());
        p.second_moment = Tensor(shape, entry.at("v").get<std::vector<double>>());
        p.step = entry.at("step").get<std::uint64_t>();
      }
    }
  }

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace mvcl
