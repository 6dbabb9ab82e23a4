#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tgc/core/autodiff.hpp"
#include "tgc/core/rng.hpp"

namespace tgc {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor, scaled by max(1, |loss|): errors on gradients below
  /// it are measured against it instead of the gradient.
  double floor = 1e-6;
  /// Coordinates sampled per leaf; leaves no larger than this are checked
  /// exhaustively.
  std::size_t max_coords_per_leaf = 24;
  /// On a mismatch, re-difference at step/10 and step/100. If those two
  /// disagree the coordinate sits on a kink and is skipped.
  bool kink_retry = false;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coordinates = 0;
  std::size_t kinks = 0;
  double loss = 0;
};

/// Compares the analytic gradient of `loss_fn` with central differences.
/// `loss_fn` must rebuild its graph from the current values of `leaves` on
/// every call and return a scalar.
inline GradCheckResult gradcheck(const std::function<Var<double>()>& loss_fn, const std::vector<Var<double>>& leaves,
                                 Rng& rng, const GradCheckOptions& opt = {}) {
  std::vector<Var<double>> work = leaves;
  for (auto& l : work) {
    l.set_requires_grad(true);
    l.zero_grad();
  }
  const Var<double> root = loss_fn();
  backward(root);
  GradCheckResult res;
  res.loss = root.value().item();
  std::vector<Tensor<double>> analytic;
  for (const auto& l : work) analytic.push_back(l.grad());
  const double floor = opt.floor * std::max(1.0, std::abs(res.loss));

  for (std::size_t li = 0; li < work.size(); ++li) {
    Tensor<double>& value = work[li].mutable_value();
    std::vector<std::size_t> coords;
    if (value.size() <= opt.max_coords_per_leaf) {
      for (std::size_t i = 0; i < value.size(); ++i) coords.push_back(i);
    } else {
      for (std::size_t k = 0; k < opt.max_coords_per_leaf; ++k) coords.push_back(rng.uniform_index(value.size()));
    }
    const auto central = [&](std::size_t i, double h) {
      const double orig = value[i];
      value[i] = orig + h;
      const double fp = loss_fn().value().item();
      value[i] = orig - h;
      const double fm = loss_fn().value().item();
      value[i] = orig;
      return (fp - fm) / (2 * h);
    };
    const auto rel = [&](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); };
    for (std::size_t i : coords) {
      const double a = analytic[li][i];
      double err = rel(a, central(i, opt.step));
      if (err > opt.tolerance && opt.kink_retry) {
        const double n1 = central(i, opt.step / 10), n2 = central(i, opt.step / 100);
        if (rel(n1, n2) > opt.tolerance) {
          ++res.kinks;
          continue;
        }
        err = rel(a, n2);
      }
      res.max_rel_error = std::max(res.max_rel_error, err);
      ++res.coordinates;
    }
  }
  for (auto& l : work) l.zero_grad();
  return res;
}

}  // namespace tgc
