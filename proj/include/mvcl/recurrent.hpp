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
#include <memory>
#include <string>
#include <vector>

#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/rng.hpp"

namespace mvcl {

enum class CellKind { lstm, gru };

inline std::size_t gate_count(CellKind kind) { return kind == CellKind::lstm ? 4 : 3; }

namespace detail {

// Per-step activations kept for the reverse sweep.
struct ScanCache {
  std::size_t steps = 0;
  std::size_t hidden = 0;
  std::vector<double> gates;  // post-activation gates, steps x G
  std::vector<double> cell;   // lstm: c_t; gru: (W_h h + b_h) candidate part, steps x h
  std::vector<double> extra;  // lstm: tanh(c_t)
  std::vector<double> state;  // h_t, steps x h
};

}  // namespace detail

/// Runs an LSTM or GRU over the rows of `preact` (steps x G, already holding
/// x W_in + b_in) with recurrent weights `w_hidden` (h x G) and bias
/// `b_hidden` (1 x G). Returns the hidden states (steps x h), row t being the
/// state after consuming row t. With `reverse` the scan starts at the last row.
///
/// Gate layout: lstm [input, forget, cell, output]; gru [reset, update, new],
/// with the new gate computed as tanh(x_n + r * (h W_n + b_n)).
inline Var recurrent_scan(const Var& preact, const Var& w_hidden, const Var& b_hidden, CellKind kind, bool reverse) {
  detail::require_same_tape("recurrent_scan", preact, w_hidden);
  detail::require_same_tape("recurrent_scan", preact, b_hidden);
  const Tensor& P = preact.value();
  const Tensor& W = w_hidden.value();
  const Tensor& B = b_hidden.value();
  const std::size_t h = W.rows();
  const std::size_t G = gate_count(kind) * h;
  if (W.cols() != G || P.cols() != G) detail::shape_mismatch("recurrent_scan", P.shape(), W.shape());
  if (B.rows() != 1 || B.cols() != G) detail::shape_mismatch("recurrent_scan", W.shape(), B.shape());
  const std::size_t n = P.rows();

  auto cache = std::make_shared<detail::ScanCache>();
  cache->steps = n;
  cache->hidden = h;
  cache->gates.assign(n * G, 0.0);
  cache->cell.assign(n * h, 0.0);
  cache->extra.assign(n * h, 0.0);
  cache->state.assign(n * h, 0.0);

  std::vector<double> hprev(h, 0.0), cprev(h, 0.0), rec(G);
  Tensor out({n, h});
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    for (std::size_t g = 0; g < G; ++g) {
      double acc = B[g];
      for (std::size_t k = 0; k < h; ++k) acc += hprev[k] * W(k, g);
      rec[g] = acc;
    }
    double* gates = &cache->gates[t * G];
    double* hcur = &cache->state[t * h];
    if (kind == CellKind::lstm) {
      for (std::size_t k = 0; k < h; ++k) {
        const double i = sigmoid(P(t, k) + rec[k]);
        const double f = sigmoid(P(t, h + k) + rec[h + k]);
        const double c_hat = std::tanh(P(t, 2 * h + k) + rec[2 * h + k]);
        const double o = sigmoid(P(t, 3 * h + k) + rec[3 * h + k]);
        const double c = f * cprev[k] + i * c_hat;
        const double tc = std::tanh(c);
        gates[k] = i;
        gates[h + k] = f;
        gates[2 * h + k] = c_hat;
        gates[3 * h + k] = o;
        cache->cell[t * h + k] = c;
        cache->extra[t * h + k] = tc;
        hcur[k] = o * tc;
      }
      for (std::size_t k = 0; k < h; ++k) cprev[k] = cache->cell[t * h + k];
    } else {
      for (std::size_t k = 0; k < h; ++k) {
        const double r = sigmoid(P(t, k) + rec[k]);
        const double z = sigmoid(P(t, h + k) + rec[h + k]);
        const double nn = std::tanh(P(t, 2 * h + k) + r * rec[2 * h + k]);
        gates[k] = r;
        gates[h + k] = z;
        gates[2 * h + k] = nn;
        cache->cell[t * h + k] = rec[2 * h + k];
        hcur[k] = (1.0 - z) * nn + z * hprev[k];
      }
    }
    for (std::size_t k = 0; k < h; ++k) {
      hprev[k] = hcur[k];
      out(t, k) = hcur[k];
    }
  }

  const std::size_t pp = preact.id(), pw = w_hidden.id(), pb = b_hidden.id();
  return preact.tape().record(
      "recurrent_scan", std::move(out), {pp, pw, pb}, [pp, pw, pb, kind, reverse, cache](Tape& t, std::size_t self) {
        const Tensor& W = t.value(pw);
        const Tensor& Gout = t.grad(self);
        const std::size_t n = cache->steps, h = cache->hidden, G = gate_count(kind) * h;
        Tensor dP({n, G});
        Tensor dW({h, G});
        Tensor dB({1, G});
        std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), da(G), dh(h);
        const std::vector<double> zeros(h, 0.0);
        for (std::size_t s = n; s-- > 0;) {
          const std::size_t step = reverse ? n - 1 - s : s;
          const double* gates = &cache->gates[step * G];
          const bool first = s == 0;
          const std::size_t prev = reverse ? step + 1 : step - 1;
          const double* hprev = first ? zeros.data() : &cache->state[prev * h];
          for (std::size_t k = 0; k < h; ++k) dh[k] = Gout(step, k) + dh_next[k];
          std::vector<double> dh_prev(h, 0.0);
          if (kind == CellKind::lstm) {
            const double* cprev = first ? zeros.data() : &cache->cell[prev * h];
            for (std::size_t k = 0; k < h; ++k) {
              const double i = gates[k], f = gates[h + k], c_hat = gates[2 * h + k], o = gates[3 * h + k];
              const double tc = cache->extra[step * h + k];
              const double d_o = dh[k] * tc;
              const double dc = dh[k] * o * (1.0 - tc * tc) + dc_next[k];
              da[k] = dc * c_hat * i * (1.0 - i);
              da[h + k] = dc * cprev[k] * f * (1.0 - f);
              da[2 * h + k] = dc * i * (1.0 - c_hat * c_hat);
              da[3 * h + k] = d_o * o * (1.0 - o);
              dc_next[k] = dc * f;
            }
            for (std::size_t g = 0; g < G; ++g) {
              dP(step, g) = da[g];
              dB[g] += da[g];
            }
          } else {
            std::vector<double> drec(G);
            for (std::size_t k = 0; k < h; ++k) {
              const double r = gates[k], z = gates[h + k], nn = gates[2 * h + k];
              const double rec_n = cache->cell[step * h + k];
              const double dn = dh[k] * (1.0 - z);
              const double dz = dh[k] * (hprev[k] - nn);
              dh_prev[k] = dh[k] * z;
              const double dan = dn * (1.0 - nn * nn);
              const double dr = dan * rec_n;
              da[k] = dr * r * (1.0 - r);
              da[h + k] = dz * z * (1.0 - z);
              da[2 * h + k] = dan;
              drec[k] = da[k];
              drec[h + k] = da[h + k];
              drec[2 * h + k] = dan * r;
            }
            for (std::size_t g = 0; g < G; ++g) {
              dP(step, g) = da[g];
              dB[g] += drec[g];
            }
            da = drec;
          }
          // da now holds the gradient w.r.t. the recurrent pre-activation.
          for (std::size_t k = 0; k < h; ++k) {
            double acc = dh_prev[k];
            for (std::size_t g = 0; g < G; ++g) {
              dW(k, g) += hprev[k] * da[g];
              acc += da[g] * W(k, g);
            }
            dh_next[k] = acc;
          }
        }
        detail::accumulate(t, pp, dP);
        detail::accumulate(t, pw, dW);
        detail::accumulate(t, pb, dB);
      });
}

/// One direction of a recurrent layer with its own parameters under `prefix`.
struct RecurrentLayer {
  std::string prefix;
  CellKind kind = CellKind::lstm;
  std::size_t input = 0;
  std::size_t hidden = 0;

  void register_parameters(ParameterStore& store, Rng& rng) const {
    const std::size_t G = gate_count(kind) * hidden;
    store.add_uniform(prefix + ".w_in", {input, G}, input, rng);
    store.add_uniform(prefix + ".b_in", {1, G}, hidden, rng);
    store.add_uniform(prefix + ".w_hid", {hidden, G}, hidden, rng);
    store.add_uniform(prefix + ".b_hid", {1, G}, hidden, rng);
  }

  Var forward(Tape& tape, ParameterStore& store, const Var& x, bool reverse) const {
    Var pre = affine(x, tape.parameter(store, prefix + ".w_in"), tape.parameter(store, prefix + ".b_in"));
    return recurrent_scan(pre, tape.parameter(store, prefix + ".w_hid"), tape.parameter(store, prefix + ".b_hid"),
                          kind, reverse);
  }
};

/// Forward and backward layers; outputs concatenated per position (n x 2h).
struct BidirectionalRecurrent {
  RecurrentLayer forward_layer;
  RecurrentLayer backward_layer;

  BidirectionalRecurrent() = default;
  BidirectionalRecurrent(const std::string& prefix, CellKind kind, std::size_t input, std::size_t hidden)
      : forward_layer{prefix + ".fw", kind, input, hidden}, backward_layer{prefix + ".bw", kind, input, hidden} {}

  void register_parameters(ParameterStore& store, Rng& rng) const {
    forward_layer.register_parameters(store, rng);
    backward_layer.register_parameters(store, rng);
  }

  Var forward(Tape& tape, ParameterStore& store, const Var& x) const {
    Var fw = forward_layer.forward(tape, store, x, false);
    Var bw = backward_layer.forward(tape, store, x, true);
    return concat({fw, bw}, 1);
  }
};

}  // namespace mvcl
