#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tgc/core/tensor.hpp"

namespace tgc {

struct AdamConfig {
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments for one group of parameters updated together. Moments are created
/// as zeros on the first step.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const AdamConfig& c)
      : learning_rate(c.learning_rate), beta1(c.beta1), beta2(c.beta2), epsilon(c.epsilon) {}
};

/// One bias-corrected Adam update applied in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const Tensor<T>* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam_step: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->require_same_shape(*grads[i], "adam_step");
    params[i]->require_same_shape(state.first_moment[i], "adam_step");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T lr = static_cast<T>(state.learning_rate), eps = static_cast<T>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->ptr();
    const T* g = grads[i]->ptr();
    T* m = state.first_moment[i].ptr();
    T* v = state.second_moment[i].ptr();
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      m[j] = b1 * m[j] + (T{1} - b1) * g[j];
      v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
      const T mhat = m[j] / c1;
      const T vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace tgc
