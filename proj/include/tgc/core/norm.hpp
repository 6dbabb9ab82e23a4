#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tgc/core/ops.hpp"
#include "tgc/core/parallel.hpp"

namespace tgc {

enum class NormMode { kTrain, kInference };

/// Running statistics for inference-mode batch norm, updated as
/// running = momentum * running + (1 - momentum) * batch.
template <typename T>
struct RunningStats {
  Tensor<T> mean;
  Tensor<T> var;
  T momentum = T(0.99);

  RunningStats() = default;
  explicit RunningStats(std::size_t channels, T momentum_ = T(0.99))
      : mean(Shape{channels}, T{0}), var(Shape{channels}, T{1}), momentum(momentum_) {}
};

/// Per-channel batch normalization over x[N, C, ...] (rank 1 is read as
/// [N, 1]). Training mode normalizes with the biased batch statistics and, if
/// `running` is given, folds them into it; inference mode uses `running`.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps,
                  NormMode mode = NormMode::kTrain, RunningStats<T>* running = nullptr) {
  const Shape& s = x.shape();
  if (s.empty()) throw DimensionError("batch_norm: scalar input");
  const std::size_t n = s[0];
  const std::size_t c = s.size() >= 2 ? s[1] : 1;
  const std::size_t cells = x.size() / (n * c);
  if (gamma.size() != c || beta.size() != c) {
    throw DimensionError("batch_norm: gamma/beta must have " + std::to_string(c) + " entries");
  }
  if (mode == NormMode::kTrain && n < 2) {
    throw PreconditionError("batch_norm in training mode needs a batch of at least 2, got " + std::to_string(n));
  }
  if (mode == NormMode::kInference && (!running || running->mean.size() != c)) {
    throw PreconditionError("batch_norm inference mode needs running statistics");
  }
  const T* xv = x.value().ptr();
  const auto at = [cells, c](std::size_t b, std::size_t ch, std::size_t j) { return (b * c + ch) * cells + j; };
  const T count = static_cast<T>(n * cells);

  std::vector<T> mu(c), inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (mode == NormMode::kTrain) {
      T m{0};
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < cells; ++j) m += xv[at(b, ch, j)];
      }
      m /= count;
      T v{0};
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < cells; ++j) {
          const T d = xv[at(b, ch, j)] - m;
          v += d * d;
        }
      }
      v /= count;
      mu[ch] = m;
      inv_std[ch] = T{1} / std::sqrt(v + eps);
      if (running) {
        running->mean[ch] = running->momentum * running->mean[ch] + (T{1} - running->momentum) * m;
        running->var[ch] = running->momentum * running->var[ch] + (T{1} - running->momentum) * v;
      }
    } else {
      mu[ch] = running->mean[ch];
      inv_std[ch] = T{1} / std::sqrt(running->var[ch] + eps);
    }
  }

  Tensor<T> xhat(s), y(s);
  const T* gp = gamma.value().ptr();
  const T* bp = beta.value().ptr();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t j = 0; j < cells; ++j) {
        const std::size_t i = at(b, ch, j);
        xhat[i] = (xv[i] - mu[ch]) * inv_std[ch];
        y[i] = gp[ch] * xhat[i] + bp[ch];
      }
    }
  }

  const bool train = mode == NormMode::kTrain;
  return make_op<T>(
      std::move(y), "batch_norm", {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, cells, count, train, at](
          const DiffNode<T>& self, const Tensor<T>& g, std::span<Tensor<T>* const> pg) {
        const T* gp = self.parents[1]->value.ptr();
        for (std::size_t ch = 0; ch < c; ++ch) {
          T sum_g{0}, sum_gx{0};
          for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t j = 0; j < cells; ++j) {
              const std::size_t i = at(b, ch, j);
              sum_g += g[i];
              sum_gx += g[i] * xhat[i];
            }
          }
          if (pg[1]) (*pg[1])[ch] += sum_gx;
          if (pg[2]) (*pg[2])[ch] += sum_g;
          if (!pg[0]) continue;
          const T k = gp[ch] * inv_std[ch];
          for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t j = 0; j < cells; ++j) {
              const std::size_t i = at(b, ch, j);
              (*pg[0])[i] += train ? k * (g[i] - sum_g / count - xhat[i] * sum_gx / count) : k * g[i];
            }
          }
        }
      });
}

}  // namespace tgc
