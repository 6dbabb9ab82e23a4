#pragma once

// Reference implementations used only by tests. They are written directly
// from the definitions (nested loops) and share no code with the library's
// im2col/GEMM paths.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tgc/core/tensor.hpp"

namespace tgc::oracle {

/// Direct 3D cross-correlation on an unbatched input x[Cin, L, H, W].
inline Tensor<double> conv3d_direct(const Tensor<double>& x, const Tensor<double>& k, std::array<std::size_t, 3> s,
                                    std::array<std::size_t, 3> p) {
  const std::size_t ci_n = x.dim(0), co_n = k.dim(0);
  const std::size_t in[3] = {x.dim(1), x.dim(2), x.dim(3)};
  const std::size_t kk[3] = {k.dim(2), k.dim(3), k.dim(4)};
  std::size_t out[3];
  for (int d = 0; d < 3; ++d) out[d] = (in[d] + 2 * p[d] - kk[d]) / s[d] + 1;
  Tensor<double> y(Shape{co_n, out[0], out[1], out[2]});
  for (std::size_t co = 0; co < co_n; ++co)
    for (std::size_t a = 0; a < out[0]; ++a)
      for (std::size_t b = 0; b < out[1]; ++b)
        for (std::size_t c = 0; c < out[2]; ++c) {
          double acc = 0;
          for (std::size_t ci = 0; ci < ci_n; ++ci)
            for (std::size_t i = 0; i < kk[0]; ++i)
              for (std::size_t j = 0; j < kk[1]; ++j)
                for (std::size_t l = 0; l < kk[2]; ++l) {
                  const long z = static_cast<long>(a * s[0] + i) - static_cast<long>(p[0]);
                  const long r = static_cast<long>(b * s[1] + j) - static_cast<long>(p[1]);
                  const long q = static_cast<long>(c * s[2] + l) - static_cast<long>(p[2]);
                  if (z < 0 || r < 0 || q < 0 || z >= static_cast<long>(in[0]) || r >= static_cast<long>(in[1]) ||
                      q >= static_cast<long>(in[2]))
                    continue;
                  acc += x[((ci * in[0] + z) * in[1] + r) * in[2] + q] *
                         k[(((co * ci_n + ci) * kk[0] + i) * kk[1] + j) * kk[2] + l];
                }
          y[((co * out[0] + a) * out[1] + b) * out[2] + c] = acc;
        }
  return y;
}

/// Transposed convolution by scattering every input voxel through the kernel.
inline Tensor<double> conv3d_transposed_scatter(const Tensor<double>& x, const Tensor<double>& k,
                                                std::array<std::size_t, 3> s, std::array<std::size_t, 3> p) {
  const std::size_t ci_n = x.dim(0), co_n = k.dim(1);
  const std::size_t in[3] = {x.dim(1), x.dim(2), x.dim(3)};
  const std::size_t kk[3] = {k.dim(2), k.dim(3), k.dim(4)};
  long out[3];
  for (int d = 0; d < 3; ++d) out[d] = (static_cast<long>(in[d]) - 1) * s[d] - 2 * static_cast<long>(p[d]) + kk[d];
  Tensor<double> y(Shape{co_n, static_cast<std::size_t>(out[0]), static_cast<std::size_t>(out[1]),
                         static_cast<std::size_t>(out[2])});
  for (std::size_t ci = 0; ci < ci_n; ++ci)
    for (std::size_t a = 0; a < in[0]; ++a)
      for (std::size_t b = 0; b < in[1]; ++b)
        for (std::size_t c = 0; c < in[2]; ++c) {
          const double v = x[((ci * in[0] + a) * in[1] + b) * in[2] + c];
          for (std::size_t co = 0; co < co_n; ++co)
            for (std::size_t i = 0; i < kk[0]; ++i)
              for (std::size_t j = 0; j < kk[1]; ++j)
                for (std::size_t l = 0; l < kk[2]; ++l) {
                  const long z = static_cast<long>(a * s[0] + i) - static_cast<long>(p[0]);
                  const long r = static_cast<long>(b * s[1] + j) - static_cast<long>(p[1]);
                  const long q = static_cast<long>(c * s[2] + l) - static_cast<long>(p[2]);
                  if (z < 0 || r < 0 || q < 0 || z >= out[0] || r >= out[1] || q >= out[2]) continue;
                  y[((co * out[0] + z) * out[1] + r) * out[2] + q] +=
                      v * k[(((ci * co_n + co) * kk[0] + i) * kk[1] + j) * kk[2] + l];
                }
        }
  return y;
}

/// Central difference of a scalar function of one tensor, every coordinate.
inline Tensor<double> central_difference(const std::function<double(const Tensor<double>&)>& f, Tensor<double> x,
                                         double h = 1e-5) {
  Tensor<double> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double max_relative_error(const Tensor<double>& a, const Tensor<double>& b, double floor = 1e-8) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// Reflection by single-pixel steps: the position bounces off 0 and `limit`.
inline std::vector<std::size_t> bounce_by_steps(std::size_t start, int direction, std::size_t speed, std::size_t limit,
                                                std::size_t frames) {
  std::vector<std::size_t> out;
  long p = static_cast<long>(start), d = direction;
  for (std::size_t t = 0; t < frames; ++t) {
    out.push_back(static_cast<std::size_t>(p));
    if (limit == 0) continue;
    for (std::size_t k = 0; k < speed; ++k) {
      if (p + d < 0 || p + d > static_cast<long>(limit)) d = -d;
      p += d;
    }
  }
  return out;
}

}  // namespace tgc::oracle
