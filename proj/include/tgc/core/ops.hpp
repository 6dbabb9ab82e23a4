#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgc/core/autodiff.hpp"

namespace tgc {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

namespace detail {

template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& x, std::string_view tag, F f, D deriv) {
  const Tensor<T>& xv = x.value();
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  return make_op<T>(std::move(y), tag, {x},
                    [deriv](const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      const Tensor<T>& in = self.parents[0]->value;
                      Tensor<T>& dx = *pg[0];
                      for (std::size_t i = 0; i < in.size(); ++i) dx[i] += g[i] * deriv(in[i], self.value[i]);
                    });
}

inline void require_rank(const Shape& s, std::size_t rank, std::string_view what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(s));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> relu(const Var<T>& x) {
  return detail::unary(
      x, "relu", [](T v) { return v > T{0} ? v : T{0}; },
      [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return detail::unary(
      x, "leaky_relu", [slope](T v) { return v > T{0} ? v : slope * v; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return detail::unary(
      x, "sigmoid", [](T v) { return sigmoid_scalar(v); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return detail::unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  return detail::unary(
      x, "scale", [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T c) {
  return detail::unary(
      x, "add_scalar", [c](T v) { return v + c; }, [](T, T) { return T{1}; });
}

template <typename T>
Var<T> square(const Var<T>& x) {
  return detail::unary(
      x, "square", [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

/// log(clamp(p, eps, 1 - eps)). Clamped entries get zero gradient and are
/// counted into `clamped` when provided.
template <typename T>
Var<T> clamped_log(const Var<T>& p, T eps, std::size_t* clamped = nullptr) {
  const Tensor<T>& pv = p.value();
  Tensor<T> y(pv.shape());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    T v = pv[i];
    if (v < eps || v > T{1} - eps) {
      if (clamped) ++*clamped;
      v = std::clamp(v, eps, T{1} - eps);
    }
    y[i] = std::log(v);
  }
  return make_op<T>(std::move(y), "clamped_log", {p},
                    [eps](const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      const Tensor<T>& in = self.parents[0]->value;
                      for (std::size_t i = 0; i < in.size(); ++i) {
                        const T v = in[i];
                        if (v >= eps && v <= T{1} - eps) (*pg[0])[i] += g[i] / v;
                      }
                    });
}

/// log(1 - clamp(p, eps, 1 - eps)), same clamping rule as clamped_log.
template <typename T>
Var<T> clamped_log1m(const Var<T>& p, T eps, std::size_t* clamped = nullptr) {
  const Tensor<T>& pv = p.value();
  Tensor<T> y(pv.shape());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    T v = pv[i];
    if (v < eps || v > T{1} - eps) {
      if (clamped) ++*clamped;
      v = std::clamp(v, eps, T{1} - eps);
    }
    y[i] = std::log(T{1} - v);
  }
  return make_op<T>(std::move(y), "clamped_log1m", {p},
                    [eps](const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      const Tensor<T>& in = self.parents[0]->value;
                      for (std::size_t i = 0; i < in.size(); ++i) {
                        const T v = in[i];
                        if (v >= eps && v <= T{1} - eps) (*pg[0])[i] -= g[i] / (T{1} - v);
                      }
                    });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "add");
  Tensor<T> y = a.value();
  y += b.value();
  return make_op<T>(std::move(y), "add", {a, b},
                    [](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      if (pg[0]) *pg[0] += g;
                      if (pg[1]) *pg[1] += g;
                    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "sub");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return make_op<T>(std::move(y), "sub", {a, b},
                    [](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      if (pg[0]) *pg[0] += g;
                      if (pg[1]) {
                        for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] -= g[i];
                      }
                    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "mul");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return make_op<T>(std::move(y), "mul", {a, b},
                    [](const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      const Tensor<T>& av = self.parents[0]->value;
                      const Tensor<T>& bv = self.parents[1]->value;
                      if (pg[0]) {
                        for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * bv[i];
                      }
                      if (pg[1]) {
                        for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] += g[i] * av[i];
                      }
                    });
}

/// Sum of a list of same-shaped terms; keeps the summation order of the list.
template <typename T>
Var<T> add_n(const std::vector<Var<T>>& terms) {
  if (terms.empty()) throw InputError("add_n of an empty list");
  Tensor<T> y = terms[0].value();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    y.require_same_shape(terms[k].value(), "add_n");
    y += terms[k].value();
  }
  return make_op<T>(std::move(y), "add_n", terms,
                    [](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      for (auto* slot : pg) {
                        if (slot) *slot += g;
                      }
                    });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Var<T> sum(const Var<T>& x) {
  return make_op<T>(Tensor<T>::scalar(x.value().sum()), "sum", {x},
                    [](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dx = *pg[0];
                      const T gv = g[0];
                      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gv;
                    });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.size()));
}

/// [N, ...] -> [N], summing everything but the leading axis.
template <typename T>
Var<T> sum_per_row(const Var<T>& x) {
  const std::size_t n = x.shape().at(0);
  const std::size_t k = x.size() / n;
  Tensor<T> y(Shape{n});
  for (std::size_t r = 0; r < n; ++r) {
    T acc{0};
    for (std::size_t j = 0; j < k; ++j) acc += x.value()[r * k + j];
    y[r] = acc;
  }
  return make_op<T>(std::move(y), "sum_per_row", {x},
                    [n, k](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dx = *pg[0];
                      for (std::size_t r = 0; r < n; ++r) {
                        for (std::size_t j = 0; j < k; ++j) dx[r * k + j] += g[r];
                      }
                    });
}

// ---------------------------------------------------------------------------
// Linear algebra

/// x[n×a] · w[a×b] (+ bias[b]).
namespace detail {
template <typename T>
Var<T> linear_impl(const Var<T>& x, const Var<T>& w, const Var<T>* bias) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0]) {
    throw DimensionError("linear: incompatible shapes x" + shape_str(xs) + " and w" + shape_str(ws));
  }
  const std::size_t n = xs[0], a = xs[1], b = ws[1];
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != b)) {
    throw DimensionError("linear: bias shape " + shape_str(bias->shape()) + " does not match w" +
                         shape_str(ws));
  }
  Tensor<T> y(Shape{n, b});
  MatMap<T> ym(y.ptr(), n, b);
  ym.noalias() = ConstMatMap<T>(x.value().ptr(), n, a) * ConstMatMap<T>(w.value().ptr(), a, b);
  if (bias) {
    const T* bp = bias->value().ptr();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < b; ++c) y[r * b + c] += bp[c];
    }
  }
  std::vector<Var<T>> parents{x, w};
  if (bias) parents.push_back(*bias);
  return make_op<T>(std::move(y), "linear", std::move(parents),
                    [n, a, b](const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      ConstMatMap<T> gm(g.ptr(), n, b);
                      if (pg[0]) {
                        MatMap<T>(pg[0]->ptr(), n, a).noalias() +=
                            gm * ConstMatMap<T>(self.parents[1]->value.ptr(), a, b).transpose();
                      }
                      if (pg[1]) {
                        MatMap<T>(pg[1]->ptr(), a, b).noalias() +=
                            ConstMatMap<T>(self.parents[0]->value.ptr(), n, a).transpose() * gm;
                      }
                      if (pg.size() > 2 && pg[2]) {
                        Tensor<T>& db = *pg[2];
                        for (std::size_t r = 0; r < n; ++r) {
                          for (std::size_t c = 0; c < b; ++c) db[c] += g[r * b + c];
                        }
                      }
                    });
}
}  // namespace detail

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w) {
  return detail::linear_impl(x, w, static_cast<const Var<T>*>(nullptr));
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias) {
  return detail::linear_impl(x, w, &bias);
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  return linear(a, b);
}

/// Rows of `table` picked by `indices`: the one-hot × matrix product done as a
/// gather.
template <typename T>
Var<T> embedding(std::span<const std::size_t> indices, const Var<T>& table) {
  detail::require_rank(table.shape(), 2, "embedding");
  const std::size_t vocab = table.shape()[0], width = table.shape()[1];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor<T> y(Shape{idx.size(), width});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= vocab) {
      throw DimensionError("embedding index " + std::to_string(idx[r]) + " out of range " +
                           std::to_string(vocab));
    }
    std::copy_n(table.value().ptr() + idx[r] * width, width, y.ptr() + r * width);
  }
  return make_op<T>(std::move(y), "embedding", {table},
                    [idx, width](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dt = *pg[0];
                      for (std::size_t r = 0; r < idx.size(); ++r) {
                        for (std::size_t c = 0; c < width; ++c) dt[idx[r] * width + c] += g[r * width + c];
                      }
                    });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> y = x.value().reshaped(std::move(shape));
  return make_op<T>(std::move(y), "reshape", {x},
                    [](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dx = *pg[0];
                      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                    });
}

namespace detail {

/// View of a shape as (outer, axis, inner) for axis-wise ops.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

inline AxisSplit split_at(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  a.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

}  // namespace detail

/// Swaps two axes (materialized copy).
template <typename T>
Var<T> transpose(const Var<T>& x, std::size_t axis_a, std::size_t axis_b) {
  const Shape& in = x.shape();
  if (axis_a >= in.size() || axis_b >= in.size()) throw DimensionError("transpose: axis out of range");
  Shape out = in;
  std::swap(out[axis_a], out[axis_b]);
  const std::size_t rank = in.size();
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * in[i + 1];
  std::vector<std::size_t> perm_stride = in_stride;
  std::swap(perm_stride[axis_a], perm_stride[axis_b]);
  // map[o] = input flat index of output element o
  std::vector<std::size_t> map(x.size());
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t o = 0; o < map.size(); ++o) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) src += idx[d] * perm_stride[d];
    map[o] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  Tensor<T> y(out);
  for (std::size_t o = 0; o < map.size(); ++o) y[o] = x.value()[map[o]];
  return make_op<T>(std::move(y), "transpose", {x},
                    [map = std::move(map)](const DiffNode<T>&, const Tensor<T>& g,
                                           std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dx = *pg[0];
                      for (std::size_t o = 0; o < map.size(); ++o) dx[map[o]] += g[o];
                    });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw InputError("concat of an empty list");
  Shape out = parts[0].shape();
  if (axis >= out.size()) throw DimensionError("concat: axis out of range for " + shape_str(out));
  std::vector<std::size_t> extents;
  out[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == out.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == out[d];
    if (!ok) throw DimensionError("concat: incompatible part " + shape_str(s) + " vs " + shape_str(parts[0].shape()));
    extents.push_back(s[axis]);
    out[axis] += s[axis];
  }
  const auto split = detail::split_at(out, axis);
  Tensor<T> y(out);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t run = extents[k] * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(parts[k].value().ptr() + o * run, run, y.ptr() + o * split.extent * split.inner + offset);
    }
    offset += run;
  }
  return make_op<T>(std::move(y), "concat", parts,
                    [extents, split](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      std::size_t offset = 0;
                      for (std::size_t k = 0; k < extents.size(); ++k) {
                        const std::size_t run = extents[k] * split.inner;
                        if (pg[k]) {
                          for (std::size_t o = 0; o < split.outer; ++o) {
                            const T* src = g.ptr() + o * split.extent * split.inner + offset;
                            T* dst = pg[k]->ptr() + o * run;
                            for (std::size_t i = 0; i < run; ++i) dst[i] += src[i];
                          }
                        }
                        offset += run;
                      }
                    });
}

/// Elements [begin, end) along `axis`.
template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto split = detail::split_at(x.shape(), axis);
  if (begin >= end || end > split.extent) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
                         shape_str(x.shape()));
  }
  Shape out = x.shape();
  out[axis] = end - begin;
  const std::size_t run = (end - begin) * split.inner;
  Tensor<T> y(out);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(x.value().ptr() + (o * split.extent + begin) * split.inner, run, y.ptr() + o * run);
  }
  return make_op<T>(std::move(y), "slice", {x},
                    [split, begin, run](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      for (std::size_t o = 0; o < split.outer; ++o) {
                        T* dst = pg[0]->ptr() + (o * split.extent + begin) * split.inner;
                        const T* src = g.ptr() + o * run;
                        for (std::size_t i = 0; i < run; ++i) dst[i] += src[i];
                      }
                    });
}

/// [N, C] -> [N, C, e0, e1, ...] by copying each vector over the new extents.
template <typename T>
Var<T> replicate_spatial(const Var<T>& x, const Shape& extents) {
  detail::require_rank(x.shape(), 2, "replicate_spatial");
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  const std::size_t cells = shape_size(extents);
  Shape out{n, c};
  out.insert(out.end(), extents.begin(), extents.end());
  Tensor<T> y(out);
  for (std::size_t i = 0; i < n * c; ++i) std::fill_n(y.ptr() + i * cells, cells, x.value()[i]);
  return make_op<T>(std::move(y), "replicate_spatial", {x},
                    [n, c, cells](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dx = *pg[0];
                      for (std::size_t i = 0; i < n * c; ++i) {
                        T acc{0};
                        for (std::size_t j = 0; j < cells; ++j) acc += g[i * cells + j];
                        dx[i] += acc;
                      }
                    });
}

/// Adds b[c] to every cell of channel c of x[N, C, ...].
template <typename T>
Var<T> add_channel_bias(const Var<T>& x, const Var<T>& b) {
  const Shape& s = x.shape();
  if (s.size() < 2 || b.shape() != Shape{s[1]}) {
    throw DimensionError("add_channel_bias: bias " + shape_str(b.shape()) + " does not match " + shape_str(s));
  }
  const std::size_t n = s[0], c = s[1], cells = x.size() / (n * c);
  Tensor<T> y = x.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* row = y.ptr() + (i * c + ch) * cells;
      for (std::size_t j = 0; j < cells; ++j) row[j] += b.value()[ch];
    }
  }
  return make_op<T>(std::move(y), "add_channel_bias", {x, b},
                    [n, c, cells](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      if (pg[0]) *pg[0] += g;
                      if (pg[1]) {
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t ch = 0; ch < c; ++ch) {
                            const T* row = g.ptr() + (i * c + ch) * cells;
                            T acc{0};
                            for (std::size_t j = 0; j < cells; ++j) acc += row[j];
                            (*pg[1])[ch] += acc;
                          }
                        }
                      }
                    });
}

/// x[N, ...] -> [N*r, ...] with row i*r + j equal to row i.
template <typename T>
Var<T> repeat_rows(const Var<T>& x, std::size_t r) {
  const Shape& s = x.shape();
  if (s.empty() || r == 0) throw DimensionError("repeat_rows: needs rank >= 1 and r >= 1");
  const std::size_t n = s[0], row = x.size() / n;
  Shape out = s;
  out[0] = n * r;
  Tensor<T> y(out);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < r; ++j) std::copy_n(x.value().ptr() + i * row, row, y.ptr() + (i * r + j) * row);
  }
  return make_op<T>(std::move(y), "repeat_rows", {x},
                    [n, r, row](const DiffNode<T>&, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
                      for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t j = 0; j < r; ++j) {
                          const T* src = g.ptr() + (i * r + j) * row;
                          T* dst = pg[0]->ptr() + i * row;
                          for (std::size_t k = 0; k < row; ++k) dst[k] += src[k];
                        }
                      }
                    });
}

// ---------------------------------------------------------------------------
// Classification

/// Sum over rows of -log softmax(logits)[target]. logits: [n×V].
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const std::size_t> targets) {
  detail::require_rank(logits.shape(), 2, "softmax_cross_entropy");
  const std::size_t n = logits.shape()[0], v = logits.shape()[1];
  if (targets.size() != n) throw DimensionError("softmax_cross_entropy: target count mismatch");
  Tensor<T> probs(Shape{n, v});
  T loss{0};
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] >= v) throw DimensionError("softmax_cross_entropy: target out of range");
    const T* row = logits.value().ptr() + r * v;
    const T mx = *std::max_element(row, row + v);
    T z{0};
    for (std::size_t c = 0; c < v; ++c) z += std::exp(row[c] - mx);
    for (std::size_t c = 0; c < v; ++c) probs[r * v + c] = std::exp(row[c] - mx) / z;
    loss -= row[targets[r]] - mx - std::log(z);
  }
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return make_op<T>(Tensor<T>::scalar(loss), "softmax_cross_entropy", {logits},
                    [probs = std::move(probs), tg, n, v](const DiffNode<T>&, const Tensor<T>& g,
                                                         std::span<Tensor<T>* const> pg) {
                      Tensor<T>& dl = *pg[0];
                      for (std::size_t r = 0; r < n; ++r) {
                        for (std::size_t c = 0; c < v; ++c) {
                          const T target = c == tg[r] ? T{1} : T{0};
                          dl[r * v + c] += g[0] * (probs[r * v + c] - target);
                        }
                      }
                    });
}

}  // namespace tgc
