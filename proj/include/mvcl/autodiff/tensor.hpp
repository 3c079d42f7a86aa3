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
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvcl/errors.hpp"

namespace mvcl {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major array of doubles. Storage accepts any rank; the
/// differentiable ops work on rank-2 tensors (vectors are 1 x n rows).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape();
    if (!std::isfinite(fill)) throw NumericError("tensor fill value is not finite");
    values_.assign(element_count(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape();
    if (values_.size() != element_count(shape_)) {
      throw ShapeError("tensor: " + std::to_string(values_.size()) + " values for shape " + to_string(shape_));
    }
    if (!all_finite()) throw NumericError("tensor: non-finite value on creation");
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  static Tensor row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
  }

  static Tensor scalar(double value) { return Tensor({1, 1}, std::vector<double>{value}); }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, 0.0); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return shape_.empty(); }

  std::size_t rows() const {
    require_matrix();
    return shape_[0];
  }
  std::size_t cols() const {
    require_matrix();
    return shape_[1];
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double item() const {
    if (values_.size() != 1) throw ShapeError("item(): tensor of shape " + to_string(shape_) + " is not a scalar");
    return values_[0];
  }

  bool all_finite() const noexcept {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// Row r as a std::vector (rank-2 only).
  std::vector<double> row_values(std::size_t r) const {
    require_matrix();
    auto begin = values_.begin() + static_cast<std::ptrdiff_t>(r * shape_[1]);
    return {begin, begin + static_cast<std::ptrdiff_t>(shape_[1])};
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void check_shape() const {
    for (std::size_t d : shape_) {
      if (d == 0) throw ShapeError("tensor: zero-sized dimension in shape " + to_string(shape_));
    }
  }

  void require_matrix() const {
    if (shape_.size() != 2) throw ShapeError("expected a rank-2 tensor, got shape " + to_string(shape_));
  }

  Shape shape_;
  std::vector<double> values_;
};

}  // namespace mvcl
