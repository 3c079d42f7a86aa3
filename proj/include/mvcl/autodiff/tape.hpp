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
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tensor.hpp"
#include "mvcl/errors.hpp"

namespace mvcl {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  inline const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a forward computation for one reverse pass.
///
/// Nodes are appended in evaluation order, so parents always precede their
/// children and the reverse sweep is a plain backwards loop. Every recorded
/// value is checked for NaN/Inf. A tape supports exactly one backward().
class Tape {
 public:
  /// Propagates the node's gradient into its parents' gradients.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Tensor value) { return push("constant", std::move(value), {}, nullptr, false); }

  /// Leaf bound to a stored parameter; repeated requests reuse the node.
  Var parameter(ParameterStore& store, const std::string& name) {
    auto key = std::make_pair(&store, name);
    if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return Var(this, it->second);
    Var v = push("parameter", store.at(name).value, {}, nullptr, grad_enabled_);
    param_nodes_.emplace(std::move(key), v.id());
    bound_stores_.insert(&store);
    return v;
  }

  Var record(std::string_view op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
    bool needs = false;
    if (grad_enabled_) {
      for (std::size_t p : parents) needs = needs || nodes_[p].requires_grad;
    }
    return push(op, std::move(value), std::move(parents), needs ? std::move(backward) : nullptr, needs);
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient slot for `id`, zero-initialized on first access.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
  }

  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Gradients of every parameter in the
  /// stores touched by this tape are overwritten (zero when unreachable).
  void backward(Var loss) {
    if (loss.tape_ != this) throw ContractError("backward: loss was recorded on another tape");
    if (nodes_.empty()) throw ContractError("backward: tape is empty");
    if (backward_done_) throw ContractError("backward: tape already consumed by a previous backward pass");
    if (loss.value().size() != 1) {
      throw ContractError("backward: loss must be scalar, got shape " + to_string(loss.value().shape()));
    }
    backward_done_ = true;
    for (ParameterStore* store : bound_stores_) store->zero_grad();
    if (!nodes_[loss.id()].requires_grad) return;

    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward(*this, i);
    }
    for (const auto& [key, id] : param_nodes_) {
      if (!nodes_[id].grad.empty()) key.first->at(key.second).grad = nodes_[id].grad;
    }
  }

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(std::string_view op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward,
           bool requires_grad) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by op '") + std::string(op) + "'");
    nodes_.push_back({op, std::move(value), Tensor(), std::move(parents), std::move(backward), requires_grad});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::map<std::pair<ParameterStore*, std::string>, std::size_t> param_nodes_;
  std::set<ParameterStore*> bound_stores_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace mvcl
