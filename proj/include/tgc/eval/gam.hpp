#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tgc/train/trainer.hpp"

namespace tgc {

enum class Verdict { kM1, kM2, kTie };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kM1: return "M1";
    case Verdict::kM2: return "M2";
    case Verdict::kTie: return "Tie";
  }
  return "?";
}

/// Winner rule. r_test counts as "about 1" when max(r, 1/r) - 1 <= tolerance,
/// which is invariant under swapping the two models.
inline Verdict judge_winner(double r_test, double r_sample, double tolerance = 0.1) {
  if (!(r_test > 0) || !(r_sample > 0) || !std::isfinite(r_test) || !std::isfinite(r_sample)) {
    throw InputError("battle ratios must be positive and finite");
  }
  if (!(tolerance >= 0)) throw InputError("tolerance must be nonnegative");
  const bool near_one = std::max(r_test, 1.0 / r_test) - 1.0 <= tolerance + 1e-12;
  if (near_one && r_sample < 1) return Verdict::kM1;
  if (near_one && r_sample > 1) return Verdict::kM2;
  return Verdict::kTie;
}

struct LabeledScore {
  double score;
  bool real;
};

/// Fraction of samples where (score >= 0.5) disagrees with the label.
inline double classification_error(std::span<const LabeledScore> samples) {
  if (samples.empty()) throw InputError("classification_error of an empty sample list");
  std::size_t wrong = 0;
  for (const auto& s : samples) wrong += (s.score >= 0.5) != s.real;
  return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

/// A generator and a discriminator behind caption-level callables so that
/// each model can use its own sentence encoder.
struct BattleModel {
  Shape video_shape;  // [C, L, H, W]
  std::size_t z_dim = 0;
  std::function<Tensor<float>(const Tensor<float>& z, const std::vector<std::string>& captions)> generate;
  std::function<std::vector<double>(const Tensor<float>& videos, const std::vector<std::string>& captions)> discriminate;
};

struct BattleReport {
  double e1_test = 0, e2_test = 0;    // each discriminator on the test set
  double e1_on_g2 = 0, e2_on_g1 = 0;  // each discriminator on the other's samples
  double r_test = 1, r_sample = 1;
  Verdict winner = Verdict::kTie;
  std::size_t n_samples = 0, n_test = 0;
  double tolerance = 0.1;
  bool smoothed = false;  // a zero error rate was replaced by 1 / (2n)
};

/// Ratios and verdict from the four error rates. Zero rates become 1/(2n)
/// of their sample count so that both ratios stay positive.
inline BattleReport report_from_rates(double e1_test, double e2_test, double e1_on_g2, double e2_on_g1,
                                      std::size_t n_test_items, std::size_t n_samples, double tolerance = 0.1) {
  BattleReport r;
  r.e1_test = e1_test;
  r.e2_test = e2_test;
  r.e1_on_g2 = e1_on_g2;
  r.e2_on_g1 = e2_on_g1;
  r.n_test = n_test_items;
  r.n_samples = n_samples;
  r.tolerance = tolerance;
  const auto floor = [&](double e, std::size_t n) {
    if (e > 0) return e;
    if (n == 0) throw InputError("battle needs a nonempty sample count");
    r.smoothed = true;
    return 1.0 / (2.0 * static_cast<double>(n));
  };
  r.r_test = floor(e1_test, n_test_items) / floor(e2_test, n_test_items);
  r.r_sample = floor(e1_on_g2, n_samples) / floor(e2_on_g1, n_samples);
  r.winner = judge_winner(r.r_test, r.r_sample, tolerance);
  return r;
}

namespace detail {
inline Tensor<float> draw_z(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> z(Shape{n, dim});
  for (auto& v : z.data()) v = static_cast<float>(rng.normal());
  return z;
}

inline std::vector<LabeledScore> labeled(const std::vector<double>& scores, bool real) {
  std::vector<LabeledScore> out;
  for (double s : scores) out.push_back({s, real});
  return out;
}
}  // namespace detail

/// Battle between two models on a test set. Test error of each
/// discriminator is measured on the real test videos (label real) plus as
/// many videos from the other generator (label fake); the sample error on a
/// separate draw of n_samples videos from the other generator. Captions are
/// drawn uniformly from the test set; both generators see the same captions
/// and, when z widths agree, the same noise.
inline BattleReport battle(const BattleModel& m1, const BattleModel& m2, const VideoDataset& test,
                           std::size_t n_samples, std::uint64_t seed, double tolerance = 0.1) {
  if (test.size() == 0) throw InputError("battle test set is empty");
  if (n_samples == 0) throw InputError("battle needs at least one generated sample");
  if (m1.video_shape != m2.video_shape || m1.video_shape != test.video_shape()) {
    throw DimensionError("battle models and test set disagree on video shape: " + shape_str(m1.video_shape) + ", " +
                         shape_str(m2.video_shape) + ", " + shape_str(test.video_shape()));
  }
  const std::size_t nt = test.size();
  std::vector<const Tensor<float>*> reals;
  std::vector<std::string> test_caps;
  for (const auto& s : test.samples) {
    reals.push_back(&s.video);
    test_caps.push_back(s.caption);
  }
  const auto real_videos = stack(reals);
  Rng rng(seed);
  std::vector<std::string> sample_caps;
  for (std::size_t i = 0; i < n_samples; ++i) sample_caps.push_back(test_caps[rng.uniform_index(nt)]);

  const auto fakes = [&](const BattleModel& m, const std::vector<std::string>& caps, std::uint64_t stream) {
    return m.generate(detail::draw_z(caps.size(), m.z_dim, derive_seed(seed, stream)), caps);
  };
  const auto test_error = [&](const BattleModel& judge, const BattleModel& other) {
    auto items = detail::labeled(judge.discriminate(real_videos, test_caps), true);
    const auto f = detail::labeled(judge.discriminate(fakes(other, test_caps, 1), test_caps), false);
    items.insert(items.end(), f.begin(), f.end());
    return classification_error(items);
  };
  const auto sample_error = [&](const BattleModel& judge, const BattleModel& other) {
    return classification_error(detail::labeled(judge.discriminate(fakes(other, sample_caps, 2), sample_caps), false));
  };
  return report_from_rates(test_error(m1, m2), test_error(m2, m1), sample_error(m1, m2), sample_error(m2, m1), 2 * nt,
                           n_samples, tolerance);
}

/// Battle model backed by a checkpoint's generator and video discriminator,
/// both with inference-mode batch norm, and its sentence encoder.
inline BattleModel battle_model(std::shared_ptr<Checkpoint> ckpt, std::shared_ptr<TextEncoder<float>> enc) {
  if (enc->embedding_dim() != ckpt->config.model.s_dim) {
    throw ConfigError("encoder width does not match the checkpoint's s_dim");
  }
  BattleModel m;
  m.video_shape = ckpt->config.model.video_shape();
  m.z_dim = ckpt->config.model.z_dim;
  auto cache = std::make_shared<std::map<std::string, Tensor<float>>>();
  auto embed = [enc, cache](const std::vector<std::string>& caps) {
    std::vector<const Tensor<float>*> rows;
    for (const auto& c : caps) {
      auto it = cache->find(c);
      if (it == cache->end()) it = cache->emplace(c, enc->encode_text(c)).first;
      rows.push_back(&it->second);
    }
    return stack(rows);
  };
  constexpr std::size_t kChunk = 64;
  m.generate = [ckpt, embed](const Tensor<float>& z, const std::vector<std::string>& caps) {
    const auto s = embed(caps);
    Tensor<float> out(Shape{caps.size(), shape_size(ckpt->config.model.video_shape())});
    for (std::size_t b = 0; b < caps.size(); b += kChunk) {
      const std::size_t e = std::min(caps.size(), b + kChunk);
      const auto v = ckpt->generator.forward(Var<float>::constant(rows_of(z, b, e)),
                                             Var<float>::constant(rows_of(s, b, e)), NormMode::kInference, false);
      std::copy_n(v.value().ptr(), v.size(), out.ptr() + b * v.size() / (e - b));
    }
    Shape vs{caps.size()};
    for (auto d : ckpt->config.model.video_shape()) vs.push_back(d);
    return out.reshaped(vs);
  };
  m.discriminate = [ckpt, embed](const Tensor<float>& videos, const std::vector<std::string>& caps) {
    const auto s = embed(caps);
    std::vector<double> out;
    for (std::size_t b = 0; b < caps.size(); b += kChunk) {
      const std::size_t e = std::min(caps.size(), b + kChunk);
      const auto p = ckpt->discriminators.video_score(Var<float>::constant(rows_of(videos, b, e)),
                                                      Var<float>::constant(rows_of(s, b, e)), NormMode::kInference,
                                                      false);
      for (float x : p.value().data()) out.push_back(x);
    }
    return out;
  };
  return m;
}

inline std::string battle_csv_header() {
  return "e1_test,e2_test,e1_on_g2,e2_on_g1,r_test,r_sample,winner,n_test,n_samples,tolerance,smoothed";
}

inline std::string battle_csv_row(const BattleReport& r) {
  char b[320];
  std::snprintf(b, sizeof(b), "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%s,%zu,%zu,%.6g,%d", r.e1_test, r.e2_test, r.e1_on_g2,
                r.e2_on_g1, r.r_test, r.r_sample, verdict_name(r.winner), r.n_test, r.n_samples, r.tolerance,
                r.smoothed ? 1 : 0);
  return b;
}

inline std::string battle_text(const BattleReport& r) {
  char b[640];
  std::snprintf(b, sizeof(b),
                "test error   M1 %.4f  M2 %.4f  (n = %zu)\n"
                "sample error M1 on G2 %.4f  M2 on G1 %.4f  (n = %zu)\n"
                "r_test %.4f  r_sample %.4f  tolerance %.3g%s\n"
                "winner: %s\n",
                r.e1_test, r.e2_test, r.n_test, r.e1_on_g2, r.e2_on_g1, r.n_samples, r.r_test, r.r_sample, r.tolerance,
                r.smoothed ? "  (zero rates smoothed to 1/2n)" : "", verdict_name(r.winner));
  return b;
}

}  // namespace tgc
