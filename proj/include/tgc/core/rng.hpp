#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace tgc {

/// SplitMix64 step. Used to expand a 64-bit seed into generator state and to
/// derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Reproducible random source used everywhere randomness is needed.
///
/// Core: xoshiro256** (Blackman & Vigna), state seeded by four successive
/// SplitMix64 outputs of the user seed.
///   uniform()      = (next() >> 11) * 2^-53, in [0, 1)
///   uniform_index  = rejection sampling on next() to avoid modulo bias
///   normal()       = Box-Muller on u1 = 1 - uniform(), u2 = uniform();
///                    returns r*cos(2*pi*u2) and caches r*sin(2*pi*u2)
///                    for the following call.
/// The full state (including the cached normal) is serializable, so a
/// restored generator continues the exact same stream.
class Rng {
 public:
  struct State {
    std::array<std::uint64_t, 4> s{};
    bool has_spare = false;
    double spare = 0.0;
  };

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_.s) word = splitmix64(sm);
    state_.has_spare = false;
    state_.spare = 0.0;
  }

  std::uint64_t next() noexcept {
    auto& s = state_.s;
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  double normal() noexcept {
    if (state_.has_spare) {
      state_.has_spare = false;
      return state_.spare;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    state_.spare = r * std::sin(theta);
    state_.has_spare = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  [[nodiscard]] const State& state() const noexcept { return state_; }
  void set_state(const State& s) noexcept { state_ = s; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  State state_;
};

/// Sub-seed for stream `index` of a parent seed (dataset samples, probes).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  std::uint64_t sm = parent ^ index;
  return splitmix64(sm);
}

}  // namespace tgc
