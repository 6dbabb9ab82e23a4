#include <gtest/gtest.h>

#include <cmath>

#include "tgc/core/init.hpp"
#include "tgc/train/losses.hpp"

using namespace tgc;

namespace {

Var<double> c(Shape s, std::vector<double> v) { return Var<double>::constant(Tensor<double>(std::move(s), std::move(v))); }
Var<double> filled(Shape s, double x) { return Var<double>::constant(Tensor<double>(std::move(s), x)); }

// -(1/3K) sum_k [ln p + ln(1-n) + ln(1-s)]
double matching_oracle(const std::vector<double>& p, const std::vector<double>& n, const std::vector<double>& s) {
  double acc = 0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::log(p[k]) + std::log(1 - n[k]) + std::log(1 - s[k]);
  return -acc / (3.0 * static_cast<double>(p.size()));
}

const double kLn2 = std::log(2.0);

}  // namespace

TEST(MatchingLoss, ScalarExamples) {
  EXPECT_NEAR(matching_loss(c({1}, {0.9}), c({1}, {0.2}), c({1}, {0.1})).value()[0], 0.1446, 5e-5);
  EXPECT_NEAR(matching_loss(c({1}, {0.9}), c({1}, {0.2}), c({1}, {0.1})).value()[0],
              matching_oracle({0.9}, {0.2}, {0.1}), 1e-12);
  EXPECT_NEAR(matching_loss(filled({1}, 0.5), filled({1}, 0.5), filled({1}, 0.5)).value()[0], kLn2, 1e-6);
  EXPECT_LT(matching_loss(filled({1}, 1.0), filled({1}, 0.0), filled({1}, 0.0)).value()[0], 1e-6);
}

TEST(MatchingLoss, FrameLevelExample) {
  const auto l = matching_loss(c({1, 2}, {0.9, 0.8}), c({1, 2}, {0.2, 0.3}), c({1, 2}, {0.1, 0.2}));
  EXPECT_EQ(l.shape(), (Shape{1}));
  EXPECT_NEAR(l.value()[0], 0.20614, 5e-5);
  EXPECT_NEAR(l.value()[0], matching_oracle({0.9, 0.8}, {0.2, 0.3}, {0.1, 0.2}), 1e-12);
}

TEST(MatchingLoss, AllHalvesGiveLn2AtEveryWidth) {
  for (std::size_t k : {1u, 7u, 16u}) {
    const auto l = matching_loss(filled({3, k}, 0.5), filled({3, k}, 0.5), filled({3, k}, 0.5));
    for (double x : l.value().data()) EXPECT_NEAR(x, kLn2, 1e-6);
  }
}

TEST(MatchingLoss, NonnegativeAndClampedAtSaturation) {
  Rng rng(1);
  const auto p = Var<double>::constant(init_uniform<double>({64, 5}, 0.0, 1.0, rng));
  const auto n = Var<double>::constant(init_uniform<double>({64, 5}, 0.0, 1.0, rng));
  const auto s = Var<double>::constant(init_uniform<double>({64, 5}, 0.0, 1.0, rng));
  for (double x : matching_loss(p, n, s).value().data()) EXPECT_GE(x, 0.0);
  std::size_t clamped = 0;
  const auto l = matching_loss(filled({1}, 0.0), filled({1}, 1.0), filled({1}, 0.5), &clamped);
  EXPECT_EQ(clamped, 2u);
  EXPECT_TRUE(std::isfinite(l.value()[0]));
  EXPECT_NEAR(l.value()[0], -(2 * std::log(kScoreEps) + std::log(0.5)) / 3, 1e-6);
}

TEST(MatchingLoss, ShapeMismatchAndEmptyBatch) {
  EXPECT_THROW(matching_loss(filled({2}, 0.5), filled({3}, 0.5), filled({2}, 0.5)), DimensionError);
  EXPECT_THROW(Tensor<double>(Shape{0}), DimensionError);
}

TEST(MeanLog, AveragesLogsPerRow) {
  const auto m = mean_log(c({2, 2}, {0.5, 0.25, 1.0, 1.0}));
  EXPECT_NEAR(m.value()[0], (std::log(0.5) + std::log(0.25)) / 2, 1e-12);
  EXPECT_NEAR(m.value()[1], 0.0, 1e-6);
}

TEST(Coherence, ConstantFeaturesGiveExactlyZero) {
  Rng rng(2);
  const auto one = init_normal<double>({1, 3, 2, 2}, 1.0, rng);
  Tensor<double> f(Shape{8, 3, 2, 2});
  for (std::size_t t = 0; t < 8; ++t) std::copy_n(one.ptr(), 12, f.ptr() + t * 12);
  const auto l = coherence_constraint(Var<double>::constant(f), 1, 8);
  EXPECT_EQ(l.value()[0], 0.0);
}

TEST(Coherence, HandComputedDistances) {
  // two frames differing by an all-ones vector of length 6
  Tensor<double> f(Shape{2, 6});
  for (std::size_t k = 0; k < 6; ++k) {
    f[k] = 0.3 * static_cast<double>(k);
    f[6 + k] = f[k] + 1.0;
  }
  EXPECT_NEAR(coherence_constraint(Var<double>::constant(f), 1, 2).value()[0], 6.0, 1e-12);
  // every pair at squared distance 4
  Tensor<double> g(Shape{2 * 5, 1});
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < 5; ++t) g[b * 5 + t] = 2.0 * static_cast<double>(t) * (b ? -1.0 : 1.0);
  }
  const auto l = coherence_constraint(Var<double>::constant(g), 2, 5);
  EXPECT_NEAR(l.value()[0], 4.0, 1e-12);
  EXPECT_NEAR(l.value()[1], 4.0, 1e-12);
}

TEST(Coherence, Errors) {
  EXPECT_THROW(coherence_constraint(filled({3, 4}, 0.0), 3, 1), PreconditionError);
  EXPECT_THROW(coherence_constraint(filled({5, 4}, 0.0), 2, 3), DimensionError);
}

TEST(MotionLoss, SingleStepMatchesVideoArithmetic) {
  const auto l = matching_loss(c({1, 1}, {0.9}), c({1, 1}, {0.2}), c({1, 1}, {0.1}));
  EXPECT_NEAR(l.value()[0], 0.1446, 5e-5);
}

TEST(DiscriminatorObjective, SchemesAtHalfScores) {
  DiscriminatorTerms<double> t{filled({1}, kLn2), filled({1}, kLn2), filled({1}, kLn2)};
  EXPECT_NEAR(discriminator_objective(Scheme::kCA, t).value()[0], kLn2, 1e-12);
  EXPECT_NEAR(discriminator_objective(Scheme::kC2, t).value()[0], kLn2, 1e-12);
  EXPECT_NEAR(discriminator_objective(Scheme::kC1, t).value()[0], kLn2, 1e-12);
  DiscriminatorTerms<double> weighted{filled({1}, 3.0), filled({1}, 5.0), filled({1}, 100.0)};
  EXPECT_NEAR(discriminator_objective(Scheme::kC1, weighted).value()[0], 3.0, 1e-12);
  EXPECT_NEAR(discriminator_objective(Scheme::kC2, weighted).value()[0], 4.0, 1e-12);
  EXPECT_NEAR(discriminator_objective(Scheme::kCC, weighted).value()[0], 4.0, 1e-12);
  EXPECT_NEAR(discriminator_objective(Scheme::kCA, weighted).value()[0], 36.0, 1e-12);
}

TEST(DiscriminatorObjective, PerfectScoresGiveZeroUnderCc) {
  const auto one = filled({1, 8}, 1.0), zero = filled({1, 8}, 0.0);
  DiscriminatorTerms<double> t{matching_loss(filled({1}, 1.0), filled({1}, 0.0), filled({1}, 0.0)),
                               matching_loss(one, zero, zero), {}};
  EXPECT_LT(discriminator_objective(Scheme::kCC, t).value()[0], 1e-6);
}

TEST(DiscriminatorObjective, AdditiveOverBatch) {
  Rng rng(3);
  const auto lv = Var<double>::constant(init_uniform<double>({2}, 0.0, 2.0, rng));
  const auto lf = Var<double>::constant(init_uniform<double>({2}, 0.0, 2.0, rng));
  const auto lt = Var<double>::constant(init_uniform<double>({2}, 0.0, 2.0, rng));
  for (Scheme s : {Scheme::kC1, Scheme::kC2, Scheme::kCC, Scheme::kCA}) {
    const double both = discriminator_objective(s, DiscriminatorTerms<double>{lv, lf, lt}).value()[0];
    double parts = 0;
    for (std::size_t b = 0; b < 2; ++b) {
      parts += discriminator_objective(s, DiscriminatorTerms<double>{slice(lv, 0, b, b + 1), slice(lf, 0, b, b + 1),
                                                                     slice(lt, 0, b, b + 1)})
                   .value()[0];
    }
    EXPECT_NEAR(both, parts, 1e-12) << scheme_name(s);
  }
}

TEST(DiscriminatorObjective, EmptyBatch) {
  EXPECT_THROW(discriminator_objective(Scheme::kCA, DiscriminatorTerms<double>{}), InputError);
  EXPECT_THROW(discriminator_objective(Scheme::kC1, DiscriminatorTerms<double>{{}, filled({1}, 0.0), {}}), InputError);
}

TEST(GeneratorObjective, SchemesAtHalfScores) {
  const auto lg = filled({1}, std::log(0.5));
  GeneratorTerms<double> t{lg, lg, filled({1}, 0.0), lg};
  EXPECT_NEAR(generator_objective(Scheme::kCA, t).value()[0], kLn2, 1e-12);
  EXPECT_NEAR(generator_objective(Scheme::kCC, t).value()[0], 2.0 / 3.0 * kLn2, 1e-12);
  EXPECT_NEAR(generator_objective(Scheme::kC2, t).value()[0], 2.0 / 3.0 * kLn2, 1e-12);
  EXPECT_NEAR(generator_objective(Scheme::kC1, t).value()[0], kLn2 / 3.0, 1e-12);
  GeneratorTerms<double> coh{lg, lg, filled({1}, 1.5), lg};
  EXPECT_NEAR(generator_objective(Scheme::kCC, coh).value()[0], (2 * kLn2 + 1.5) / 3.0, 1e-12);
  EXPECT_NEAR(generator_objective(Scheme::kC2, coh).value()[0], 2.0 / 3.0 * kLn2, 1e-12);
  EXPECT_THROW(generator_objective(Scheme::kCA, GeneratorTerms<double>{}), InputError);
}

TEST(GeneratorObjective, DecreasesAsVideoScoreRises) {
  double prev = 1e300;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto lg = mean_log(filled({1}, p));
    const double v = generator_objective(Scheme::kC1, GeneratorTerms<double>{lg, {}, {}, {}}).value()[0];
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(GeneratorObjective, PullingFramesTogetherLowersCcObjective) {
  Rng rng(4);
  auto feats = Var<double>::leaf(init_normal<double>({6, 4}, 1.0, rng), true);
  const auto lg = filled({1}, std::log(0.5));
  const auto objective = [&] {
    return generator_objective(Scheme::kCC, GeneratorTerms<double>{lg, lg, coherence_constraint(feats, 1, 6), {}});
  };
  const double before = objective().value()[0];
  Tensor<double>& f = feats.mutable_value();
  Tensor<double> mean_row(Shape{4});
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t k = 0; k < 4; ++k) mean_row[k] += f[t * 4 + k] / 6.0;
  }
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t k = 0; k < 4; ++k) f[t * 4 + k] += 1e-3 * (mean_row[k] - f[t * 4 + k]);
  }
  EXPECT_LT(objective().value()[0], before);
  feats.zero_grad();
  backward(objective());
  double norm = 0;
  for (double g : feats.grad().data()) norm += g * g;
  EXPECT_GT(norm, 0.0);
}
