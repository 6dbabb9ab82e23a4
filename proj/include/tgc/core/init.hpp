#pragma once

#include "tgc/core/rng.hpp"
#include "tgc/core/tensor.hpp"

namespace tgc {

/// Normal(mean, stddev) samples in row-major order from `rng`.
template <typename T>
Tensor<T> init_normal(const Shape& shape, double mean, double stddev, Rng& rng) {
  if (!(stddev > 0.0)) throw PreconditionError("init_normal: stddev must be positive");
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(mean, stddev));
  return t;
}

template <typename T>
Tensor<T> init_normal(const Shape& shape, double stddev, Rng& rng) {
  return init_normal<T>(shape, 0.0, stddev, rng);
}

template <typename T>
Tensor<T> init_uniform(const Shape& shape, double lo, double hi, Rng& rng) {
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace tgc
