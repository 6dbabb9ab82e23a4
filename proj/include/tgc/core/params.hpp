#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "tgc/core/adam.hpp"
#include "tgc/core/autodiff.hpp"
#include "tgc/core/norm.hpp"
#include "tgc/core/serialize.hpp"

namespace tgc {

/// Named, ordered collection of trainable leaves plus batch-norm buffers.
/// Leaves persist across forward passes; optimizers update their values in
/// place.
template <typename T>
class ParamSet {
 public:
  Var<T> add(const std::string& name, Tensor<T> init) {
    if (index_.count(name)) throw ContractError("duplicate parameter " + name);
    index_.emplace(name, params_.size());
    names_.push_back(name);
    params_.push_back(Var<T>::leaf(std::move(init), trainable_));
    return params_.back();
  }

  RunningStats<T>& add_stats(const std::string& name, std::size_t channels, T momentum) {
    if (stats_index_.count(name)) throw ContractError("duplicate statistics " + name);
    stats_index_.emplace(name, stats_.size());
    stats_names_.push_back(name);
    stats_.emplace_back(channels, momentum);
    return stats_.back();
  }

  [[nodiscard]] const Var<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter " + name);
    return params_[it->second];
  }

  [[nodiscard]] RunningStats<T>& stats(const std::string& name) {
    auto it = stats_index_.find(name);
    if (it == stats_index_.end()) throw ContractError("unknown statistics " + name);
    return stats_[it->second];
  }

  [[nodiscard]] const std::vector<Var<T>>& params() const noexcept { return params_; }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }

  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Turns gradient tracking on or off for every leaf. Graphs built while off
  /// treat the parameters as constants.
  void set_trainable(bool on) {
    trainable_ = on;
    for (auto& p : params_) p.set_requires_grad(on);
  }
  [[nodiscard]] bool trainable() const noexcept { return trainable_; }

  [[nodiscard]] std::vector<Tensor<T>*> values() {
    std::vector<Tensor<T>*> out;
    for (auto& p : params_) out.push_back(&p.mutable_value());
    return out;
  }

  [[nodiscard]] std::vector<const Tensor<T>*> grads() const {
    std::vector<const Tensor<T>*> out;
    for (const auto& p : params_) out.push_back(&p.grad());
    return out;
  }

  [[nodiscard]] double grad_norm() const {
    double acc = 0;
    for (const auto& p : params_) {
      if (p.has_grad()) acc += static_cast<double>(p.grad().squared_norm());
    }
    return std::sqrt(acc);
  }

  void adam_step(AdamState<T>& state) {
    auto v = values();
    auto g = grads();
    tgc::adam_step<T>(v, g, state);
  }

  /// Parameters under "<prefix>/<name>", statistics under
  /// "<prefix>/<name>.running_mean|running_var".
  void export_to(TensorBundle<T>& bundle, const std::string& prefix) const {
    for (std::size_t i = 0; i < params_.size(); ++i) bundle[prefix + "/" + names_[i]] = params_[i].value();
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      bundle[prefix + "/" + stats_names_[i] + ".running_mean"] = stats_[i].mean;
      bundle[prefix + "/" + stats_names_[i] + ".running_var"] = stats_[i].var;
    }
  }

  void import_from(const TensorBundle<T>& bundle, const std::string& prefix) {
    const auto fetch = [&](const std::string& key, const Tensor<T>& like) -> const Tensor<T>& {
      auto it = bundle.find(key);
      if (it == bundle.end()) throw FormatError("checkpoint is missing tensor " + key);
      if (it->second.shape() != like.shape()) {
        throw DimensionError("checkpoint tensor " + key + " has shape " + shape_str(it->second.shape()) +
                             ", model expects " + shape_str(like.shape()));
      }
      return it->second;
    };
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].mutable_value() = fetch(prefix + "/" + names_[i], params_[i].value());
    }
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      stats_[i].mean = fetch(prefix + "/" + stats_names_[i] + ".running_mean", stats_[i].mean);
      stats_[i].var = fetch(prefix + "/" + stats_names_[i] + ".running_var", stats_[i].var);
    }
  }

  /// FNV-1a over all parameter bytes; used to assert that weights are frozen.
  [[nodiscard]] std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(p.value().ptr());
      for (std::size_t i = 0; i < p.size() * sizeof(T); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
      }
    }
    return h;
  }

 private:
  std::vector<Var<T>> params_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::deque<RunningStats<T>> stats_;
  std::vector<std::string> stats_names_;
  std::map<std::string, std::size_t> stats_index_;
  bool trainable_ = true;
};

/// Exports Adam moments and step count under "<prefix>/...".
template <typename T>
void export_adam(TensorBundle<T>& bundle, const std::string& prefix, const AdamState<T>& s) {
  for (std::size_t i = 0; i < s.first_moment.size(); ++i) {
    bundle[prefix + "/m" + std::to_string(i)] = s.first_moment[i];
    bundle[prefix + "/v" + std::to_string(i)] = s.second_moment[i];
  }
  // Step count split into two exactly representable halves.
  Tensor<T> step(Shape{2});
  step[0] = static_cast<T>(s.step_count >> 20);
  step[1] = static_cast<T>(s.step_count & 0xFFFFF);
  bundle[prefix + "/step"] = step;
}

template <typename T>
void import_adam(const TensorBundle<T>& bundle, const std::string& prefix, AdamState<T>& s, std::size_t count) {
  s.first_moment.clear();
  s.second_moment.clear();
  auto step = bundle.find(prefix + "/step");
  if (step == bundle.end()) throw FormatError("checkpoint is missing " + prefix + "/step");
  s.step_count = (static_cast<std::uint64_t>(step->second[0]) << 20) | static_cast<std::uint64_t>(step->second[1]);
  if (s.step_count == 0) return;
  for (std::size_t i = 0; i < count; ++i) {
    auto m = bundle.find(prefix + "/m" + std::to_string(i));
    auto v = bundle.find(prefix + "/v" + std::to_string(i));
    if (m == bundle.end() || v == bundle.end()) throw FormatError("checkpoint is missing moments for " + prefix);
    s.first_moment.push_back(m->second);
    s.second_moment.push_back(v->second);
  }
}

}  // namespace tgc
