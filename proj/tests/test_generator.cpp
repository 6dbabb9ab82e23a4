#include <gtest/gtest.h>

#include "tgc/core/init.hpp"
#include "tgc/eval/gradsuite.hpp"
#include "tgc/model/generator.hpp"

using namespace tgc;

namespace {

ModelConfig desk() { return preset_config("desk").model; }

Var<float> normal_input(Shape s, std::uint64_t seed, double sd = 1.0) {
  Rng r(seed);
  return Var<float>::constant(init_normal<float>(std::move(s), sd, r));
}

double l2(const Tensor<float>& a, const Tensor<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(GeneratorShape, DeskPresetGivesOneByEightBySixteen) {
  const auto cfg = desk();
  EXPECT_EQ(generator_output_shape(cfg), (Shape{1, 8, 16, 16}));
  Rng rng(1);
  Generator<float> g(cfg, rng);
  const auto v = g.forward(normal_input({3, 100}, 2), normal_input({3, 256}, 3), NormMode::kTrain, false);
  EXPECT_EQ(v.shape(), (Shape{3, 1, 8, 16, 16}));
}

TEST(GeneratorShape, PaperPresetGivesThreeBySixteenByFortyEight) {
  const auto cfg = preset_config("paper").model;
  EXPECT_EQ(cfg.z_dim + cfg.p_dim, 356u);
  EXPECT_EQ(generator_output_shape(cfg), (Shape{3, 16, 48, 48}));
  Rng rng(1);
  Generator<float> g(cfg, rng);
  const auto v = g.forward(normal_input({1, 100}, 2), normal_input({1, 256}, 3), NormMode::kInference, false);
  EXPECT_EQ(v.shape(), (Shape{1, 3, 16, 48, 48}));
}

TEST(GeneratorShape, TwoFrameSeedWithUnitLastStrideGivesSeventeenFrames) {
  auto cfg = preset_config("paper").model;
  cfg.g_seed = {512, 2, 3, 3};
  cfg.g_strides.back() = {1, 2, 2};
  EXPECT_EQ(generator_output_shape(cfg), (Shape{3, 17, 48, 48}));
  Rng rng(1);
  EXPECT_THROW(Generator<float>(cfg, rng), ConfigError);
}

TEST(Fuse, ConcatenatesNoiseAndProjectedSentence) {
  auto cfg = desk();
  cfg.p_dim = cfg.s_dim;
  Rng rng(4);
  Generator<float> g(cfg, rng);
  auto* w = g.params().values()[0];
  ASSERT_EQ(g.params().names()[0], "fuse.w");
  const auto z = normal_input({2, 100}, 5), s = normal_input({2, 256}, 6);
  w->fill(0.0f);
  const auto zeros = g.fuse(Var<float>::constant(Tensor<float>(Shape{2, 100})), s);
  EXPECT_EQ(zeros.shape(), (Shape{2, 356}));
  for (float x : zeros.value().data()) EXPECT_EQ(x, 0.0f);
  for (std::size_t i = 0; i < 256; ++i) (*w)[i * 256 + i] = 1.0f;
  const auto p = g.fuse(z, s);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < 100; ++i) ASSERT_EQ(p.value()[b * 356 + i], z.value()[b * 100 + i]);
    for (std::size_t i = 0; i < 256; ++i) ASSERT_EQ(p.value()[b * 356 + 100 + i], s.value()[b * 256 + i]);
  }
  EXPECT_THROW(g.fuse(normal_input({2, 99}, 1), s), DimensionError);
  EXPECT_THROW(g.fuse(z, normal_input({3, 256}, 1)), DimensionError);
  EXPECT_THROW(g.generate(normal_input({2, 355}, 1), NormMode::kTrain, false), DimensionError);
}

TEST(GeneratorOutput, StaysInTanhRange) {
  auto cfg = desk();
  cfg.init_std = 1.0;
  Rng rng(7);
  Generator<float> g(cfg, rng);
  const auto v = g.forward(normal_input({4, 100}, 8, 10.0), normal_input({4, 256}, 9, 10.0), NormMode::kTrain, false);
  for (float x : v.value().data()) {
    ASSERT_GE(x, -1.0f);
    ASSERT_LE(x, 1.0f);
  }
}

TEST(GeneratorOutput, ConditioningIsLive) {
  Rng rng(10);
  Generator<float> g(desk(), rng);
  const auto z = normal_input({2, 100}, 11);
  const auto a = g.forward(z, normal_input({2, 256}, 12), NormMode::kInference, false);
  const auto b = g.forward(z, normal_input({2, 256}, 13), NormMode::kInference, false);
  EXPECT_GT(l2(a.value(), b.value()), 0.0);
}

TEST(GeneratorOutput, DeterministicGivenSeeds) {
  Rng r1(14), r2(14);
  Generator<float> g1(desk(), r1), g2(desk(), r2);
  const auto z = normal_input({2, 100}, 15), s = normal_input({2, 256}, 16);
  EXPECT_EQ(g1.forward(z, s, NormMode::kTrain, false).value(), g2.forward(z, s, NormMode::kTrain, false).value());
}

TEST(GeneratorOutput, StatisticsMoveOnlyWhenAsked) {
  Rng rng(17);
  Generator<float> g(desk(), rng);
  const auto z = normal_input({4, 100}, 18), s = normal_input({4, 256}, 19);
  const auto before = g.params().stats("proj.bn").mean;
  (void)g.forward(z, s, NormMode::kTrain, false);
  EXPECT_EQ(g.params().stats("proj.bn").mean, before);
  (void)g.forward(z, s, NormMode::kTrain, true);
  EXPECT_NE(g.params().stats("proj.bn").mean, before);
}

TEST(GeneratorGradients, EveryParameterReceivesFiniteNonzeroGradient) {
  Rng rng(20);
  auto cfg = gradsuite::tiny_model(rng);
  cfg.init_std = 0.3;
  Generator<double> g(cfg, rng);
  for (std::size_t i = 0; i < g.params().size(); ++i) {
    const auto& n = g.params().names()[i];
    if (n.ends_with(".b") || n.ends_with(".beta")) {
      for (auto& v : g.params().values()[i]->data()) v = rng.uniform(-0.3, 0.3);
    }
  }
  auto z = Var<double>::constant(init_normal<double>({3, cfg.z_dim}, 1.0, rng));
  auto s = Var<double>::constant(init_normal<double>({3, cfg.s_dim}, 1.0, rng));
  const auto loss = [&] { return mean(g.forward(z, s, NormMode::kTrain, false)); };
  g.params().zero_grad();
  backward(loss());
  for (std::size_t i = 0; i < g.params().size(); ++i) {
    const auto& grad = g.params().params()[i].grad();
    double norm = 0;
    for (double v : grad.data()) {
      ASSERT_TRUE(std::isfinite(v));
      norm += v * v;
    }
    EXPECT_GT(norm, 0.0) << g.params().names()[i];
  }
  GradCheckOptions opt;
  opt.kink_retry = true;
  const auto r = gradcheck(loss, g.params().params(), rng, opt);
  EXPECT_LT(r.max_rel_error, 1e-4);
}
