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

#include "mvcl/autodiff/parameter_store.hpp"

namespace mvcl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over every parameter in `store`.
/// An empty gradient slot counts as zero.
inline void adam_step(ParameterStore& store, double learning_rate, const AdamConfig& config = {}) {
  for (auto& [name, p] : store) {
    ++p.step;
    const double t = static_cast<double>(p.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    const bool has_grad = p.grad.size() == p.value.size();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = has_grad ? p.grad[i] : 0.0;
      double& m = p.first_moment[i];
      double& v = p.second_moment[i];
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g * g;
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      p.value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace mvcl
