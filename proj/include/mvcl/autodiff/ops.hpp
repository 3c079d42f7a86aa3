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

// Differentiable primitives over rank-2 tensors.
//
// Conventions: a vector is a 1 x n row. `axis` follows the numpy reading:
// softmax(x, 1) normalizes each row, max_pool(x, 0) reduces over rows to a
// 1 x cols result. relu'(0) = 0 and max_pool routes ties to the first
// maximal index.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mvcl/autodiff/tape.hpp"
#include "mvcl/autodiff/tensor.hpp"
#include "mvcl/errors.hpp"

namespace mvcl {

namespace detail {

inline void require_same_tape(const char* op, const Var& a, const Var& b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands belong to different tapes");
  }
}

[[noreturn]] inline void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

inline void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + to_string(t.shape()));
}

inline void require_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
}

inline void accumulate(Tape& t, std::size_t target, const Tensor& delta) {
  if (!t.requires_grad(target)) return;
  Tensor& g = t.grad(target);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

// Elementwise map with derivative expressed through (input, output).
template <typename F, typename DF>
Var unary(const char* op, const Var& a, F f, DF df) {
  const Tensor& x = a.value();
  require_rank2(op, x);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t pa = a.id();
  return a.tape().record(op, std::move(y), {pa}, [pa, df](Tape& t, std::size_t self) {
    if (!t.requires_grad(pa)) return;
    const Tensor& x = t.value(pa);
    const Tensor& y = t.value(self);
    const Tensor& gy = t.grad(self);
    Tensor& gx = t.grad(pa);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * df(x[i], y[i]);
  });
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  detail::require_same_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require_rank2("matmul", A);
  detail::require_rank2("matmul", B);
  if (A.cols() != B.rows()) detail::shape_mismatch("matmul", A.shape(), B.shape());
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) C(i, j) += aip * B(p, j);
    }
  }
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record("matmul", std::move(C), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& A = t.value(pa);
    const Tensor& B = t.value(pb);
    const Tensor& G = t.grad(self);
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    if (t.requires_grad(pa)) {
      Tensor& gA = t.grad(pa);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += G(i, j) * B(p, j);
          gA(i, p) += s;
        }
      }
    }
    if (t.requires_grad(pb)) {
      Tensor& gB = t.grad(pb);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gB(p, j) += aip * G(i, j);
        }
      }
    }
  });
}

inline Var transpose(const Var& a) {
  const Tensor& A = a.value();
  detail::require_rank2("transpose", A);
  Tensor T({A.cols(), A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
  }
  const std::size_t pa = a.id();
  return a.tape().record("transpose", std::move(T), {pa}, [pa](Tape& t, std::size_t self) {
    if (!t.requires_grad(pa)) return;
    const Tensor& G = t.grad(self);
    Tensor& gA = t.grad(pa);
    for (std::size_t i = 0; i < gA.rows(); ++i) {
      for (std::size_t j = 0; j < gA.cols(); ++j) gA(i, j) += G(j, i);
    }
  });
}

namespace detail {

// a (+/-) b where b has a's shape or is a 1 x cols row broadcast over a's rows.
inline Var add_or_sub(const char* op, const Var& a, const Var& b, double sign) {
  require_same_tape(op, a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(op, A);
  require_rank2(op, B);
  const bool broadcast = A.shape() != B.shape();
  if (broadcast && !(B.rows() == 1 && B.cols() == A.cols())) shape_mismatch(op, A.shape(), B.shape());
  Tensor C = A;
  const std::size_t cols = A.cols();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += sign * B[broadcast ? i % cols : i];
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(op, std::move(C), {pa, pb}, [pa, pb, sign, broadcast, cols](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    accumulate(t, pa, G);
    if (t.requires_grad(pb)) {
      Tensor& gB = t.grad(pb);
      for (std::size_t i = 0; i < G.size(); ++i) gB[broadcast ? i % cols : i] += sign * G[i];
    }
  });
}

}  // namespace detail

/// Elementwise sum; `b` may also be a 1 x cols row broadcast over the rows of `a`.
inline Var add(const Var& a, const Var& b) { return detail::add_or_sub("add", a, b, 1.0); }

/// Elementwise difference with the same broadcasting rule as add().
inline Var sub(const Var& a, const Var& b) { return detail::add_or_sub("sub", a, b, -1.0); }

inline Var mul(const Var& a, const Var& b) {
  detail::require_same_tape("mul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) detail::shape_mismatch("mul", A.shape(), B.shape());
  detail::require_rank2("mul", A);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record("mul", std::move(C), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& A = t.value(pa);
    const Tensor& B = t.value(pb);
    const Tensor& G = t.grad(self);
    if (t.requires_grad(pa)) {
      Tensor& gA = t.grad(pa);
      for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i] * B[i];
    }
    if (t.requires_grad(pb)) {
      Tensor& gB = t.grad(pb);
      for (std::size_t i = 0; i < G.size(); ++i) gB[i] += G[i] * A[i];
    }
  });
}

inline Var scale(const Var& a, double c) {
  return detail::unary("scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var concat(std::span<const Var> parts, int axis) {
  detail::require_axis("concat", axis);
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& tape = parts[0].tape();
  const Tensor& first = parts[0].value();
  detail::require_rank2("concat", first);
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    detail::require_same_tape("concat", parts[0], p);
    const Tensor& v = p.value();
    detail::require_rank2("concat", v);
    if (axis == 0) {
      if (v.cols() != first.cols()) detail::shape_mismatch("concat", first.shape(), v.shape());
      rows += v.rows();
    } else {
      if (v.rows() != first.rows()) detail::shape_mismatch("concat", first.shape(), v.shape());
      cols += v.cols();
    }
  }
  if (axis == 0) cols = first.cols();
  else rows = first.rows();

  Tensor out({rows, cols});
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < v.rows(); ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) {
        if (axis == 0) out(offset + i, j) = v(i, j);
        else out(i, offset + j) = v(i, j);
      }
    }
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += axis == 0 ? v.rows() : v.cols();
  }
  std::vector<std::size_t> parents = ids;
  return tape.record("concat", std::move(out), std::move(parents),
                     [ids, offsets, axis](Tape& t, std::size_t self) {
                       const Tensor& G = t.grad(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (!t.requires_grad(ids[k])) continue;
                         Tensor& g = t.grad(ids[k]);
                         for (std::size_t i = 0; i < g.rows(); ++i) {
                           for (std::size_t j = 0; j < g.cols(); ++j) {
                             g(i, j) += axis == 0 ? G(offsets[k] + i, j) : G(i, offsets[k] + j);
                           }
                         }
                       }
                     });
}

inline Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

/// Rows (axis 0) or columns (axis 1) in [begin, end).
inline Var slice(const Var& a, int axis, std::size_t begin, std::size_t end) {
  detail::require_axis("slice", axis);
  const Tensor& A = a.value();
  detail::require_rank2("slice", A);
  const std::size_t extent = axis == 0 ? A.rows() : A.cols();
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") outside shape " +
                     to_string(A.shape()));
  }
  const std::size_t rows = axis == 0 ? end - begin : A.rows();
  const std::size_t cols = axis == 1 ? end - begin : A.cols();
  const std::size_t r0 = axis == 0 ? begin : 0, c0 = axis == 1 ? begin : 0;
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = A(r0 + i, c0 + j);
  }
  const std::size_t pa = a.id();
  return a.tape().record("slice", std::move(out), {pa}, [pa, r0, c0](Tape& t, std::size_t self) {
    if (!t.requires_grad(pa)) return;
    const Tensor& G = t.grad(self);
    Tensor& gA = t.grad(pa);
    for (std::size_t i = 0; i < G.rows(); ++i) {
      for (std::size_t j = 0; j < G.cols(); ++j) gA(r0 + i, c0 + j) += G(i, j);
    }
  });
}

inline Var relu(const Var& a) {
  return detail::unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var tanh(const Var& a) {
  return detail::unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(const Var& a) {
  return detail::unary(
      "sigmoid", a, [](double x) { return sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

inline Var exp(const Var& a) {
  return detail::unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(const Var& a) {
  return detail::unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

/// Clamps into [lo, hi]; the gradient passes only inside the interval.
inline Var clamp(const Var& a, double lo, double hi) {
  return detail::unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

/// Softmax along `axis` with max subtraction.
inline Var softmax(const Var& a, int axis) {
  detail::require_axis("softmax", axis);
  const Tensor& A = a.value();
  detail::require_rank2("softmax", A);
  const std::size_t outer = axis == 1 ? A.rows() : A.cols();
  const std::size_t inner = axis == 1 ? A.cols() : A.rows();
  auto at = [axis](auto& T, std::size_t o, std::size_t k) -> decltype(auto) { return axis == 1 ? T(o, k) : T(k, o); };
  Tensor Y(A.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = at(A, o, 0);
    for (std::size_t k = 1; k < inner; ++k) mx = std::max(mx, at(A, o, k));
    double z = 0.0;
    for (std::size_t k = 0; k < inner; ++k) {
      at(Y, o, k) = std::exp(at(A, o, k) - mx);
      z += at(Y, o, k);
    }
    for (std::size_t k = 0; k < inner; ++k) at(Y, o, k) /= z;
  }
  const std::size_t pa = a.id();
  return a.tape().record("softmax", std::move(Y), {pa}, [pa, axis, outer, inner, at](Tape& t, std::size_t self) {
    if (!t.requires_grad(pa)) return;
    const Tensor& Y = t.value(self);
    const Tensor& G = t.grad(self);
    Tensor& gA = t.grad(pa);
    for (std::size_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (std::size_t k = 0; k < inner; ++k) dot += at(G, o, k) * at(Y, o, k);
      for (std::size_t k = 0; k < inner; ++k) at(gA, o, k) += at(Y, o, k) * (at(G, o, k) - dot);
    }
  });
}

namespace detail {

inline Var pool(const char* op, const Var& a, int axis, bool take_max) {
  require_axis(op, axis);
  const Tensor& A = a.value();
  require_rank2(op, A);
  const std::size_t outer = axis == 0 ? A.cols() : A.rows();
  const std::size_t inner = axis == 0 ? A.rows() : A.cols();
  auto at = [axis](const Tensor& T, std::size_t o, std::size_t k) { return axis == 0 ? T(k, o) : T(o, k); };
  Tensor out(axis == 0 ? Shape{1, outer} : Shape{outer, 1});
  std::vector<std::size_t> argmax(take_max ? outer : 0);
  for (std::size_t o = 0; o < outer; ++o) {
    if (take_max) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < inner; ++k) {
        if (at(A, o, k) > at(A, o, best)) best = k;
      }
      argmax[o] = best;
      out[o] = at(A, o, best);
    } else {
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += at(A, o, k);
      out[o] = s / static_cast<double>(inner);
    }
  }
  const std::size_t pa = a.id();
  return a.tape().record(op, std::move(out), {pa},
                         [pa, axis, outer, inner, take_max, argmax](Tape& t, std::size_t self) {
                           if (!t.requires_grad(pa)) return;
                           const Tensor& G = t.grad(self);
                           Tensor& gA = t.grad(pa);
                           auto slot = [&](std::size_t o, std::size_t k) -> double& {
                             return axis == 0 ? gA(k, o) : gA(o, k);
                           };
                           for (std::size_t o = 0; o < outer; ++o) {
                             if (take_max) {
                               slot(o, argmax[o]) += G[o];
                             } else {
                               for (std::size_t k = 0; k < inner; ++k) slot(o, k) += G[o] / static_cast<double>(inner);
                             }
                           }
                         });
}

}  // namespace detail

inline Var max_pool(const Var& a, int axis) { return detail::pool("max_pool", a, axis, true); }
inline Var avg_pool(const Var& a, int axis) { return detail::pool("avg_pool", a, axis, false); }

/// Sum of all elements as a 1 x 1 tensor.
inline Var sum(const Var& a) {
  const Tensor& A = a.value();
  double s = 0.0;
  for (double v : A.values()) s += v;
  const std::size_t pa = a.id();
  return a.tape().record("sum", Tensor::scalar(s), {pa}, [pa](Tape& t, std::size_t self) {
    if (!t.requires_grad(pa)) return;
    const double g = t.grad(self)[0];
    for (double& v : t.grad(pa).values()) v += g;
  });
}

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

/// Cosine similarity of two equally shaped vectors as a 1 x 1 tensor. The
/// norm product is floored at 1e-12 so zero vectors yield 0.
inline Var cosine_similarity(const Var& a, const Var& b) {
  detail::require_same_tape("cosine_similarity", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) detail::shape_mismatch("cosine_similarity", A.shape(), B.shape());
  constexpr double kFloor = 1e-12;
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    dot += A[i] * B[i];
    na2 += A[i] * A[i];
    nb2 += B[i] * B[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double den = std::max(na * nb, kFloor);
  const double sim = std::clamp(dot / den, -1.0, 1.0);
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record("cosine_similarity", Tensor::scalar(sim), {pa, pb},
                         [pa, pb, den, na, nb, kFloor](Tape& t, std::size_t self) {
                           const Tensor& A = t.value(pa);
                           const Tensor& B = t.value(pb);
                           const double g = t.grad(self)[0];
                           const double s = t.value(self)[0];
                           const bool floored = na * nb < kFloor;
                           if (t.requires_grad(pa)) {
                             Tensor& gA = t.grad(pa);
                             for (std::size_t i = 0; i < A.size(); ++i) {
                               double d = B[i] / den;
                               if (!floored && na > 0.0) d -= s * A[i] / (na * na);
                               gA[i] += g * d;
                             }
                           }
                           if (t.requires_grad(pb)) {
                             Tensor& gB = t.grad(pb);
                             for (std::size_t i = 0; i < B.size(); ++i) {
                               double d = A[i] / den;
                               if (!floored && nb > 0.0) d -= s * B[i] / (nb * nb);
                               gB[i] += g * d;
                             }
                           }
                         });
}

/// Rows of `table` selected by `ids` (embedding lookup).
inline Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
  const Tensor& T = table.value();
  detail::require_rank2("gather_rows", T);
  if (ids.empty()) throw ShapeError("gather_rows: no ids");
  const std::size_t d = T.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= T.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table " + to_string(T.shape()));
    }
    for (std::size_t j = 0; j < d; ++j) out(i, j) = T(ids[i], j);
  }
  const std::size_t pt = table.id();
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return table.tape().record("gather_rows", std::move(out), {pt}, [pt, rows, d](Tape& t, std::size_t self) {
    if (!t.requires_grad(pt)) return;
    const Tensor& G = t.grad(self);
    Tensor& gT = t.grad(pt);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) gT(rows[i], j) += G(i, j);
    }
  });
}

/// x W + b with b broadcast over rows.
inline Var affine(const Var& x, const Var& w, const Var& b) { return add(matmul(x, w), b); }

}  // namespace mvcl
