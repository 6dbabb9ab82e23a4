#include <gtest/gtest.h>

#include "tgc/eval/gam.hpp"

using namespace tgc;

namespace {

// Model whose generator emits constant videos at `level` and whose
// discriminator calls a video real when its mean exceeds `threshold`.
BattleModel toy(float level, double threshold) {
  BattleModel m;
  m.video_shape = {1, 2, 2, 2};
  m.z_dim = 3;
  m.generate = [level](const Tensor<float>& z, const std::vector<std::string>& caps) {
    return Tensor<float>(Shape{caps.size(), 1, 2, 2, 2}, level + 0.01f * z[0]);
  };
  m.discriminate = [threshold](const Tensor<float>& v, const std::vector<std::string>& caps) {
    std::vector<double> out;
    for (std::size_t i = 0; i < caps.size(); ++i) {
      double s = 0;
      for (std::size_t k = 0; k < 8; ++k) s += v[i * 8 + k];
      out.push_back(s / 8 > threshold ? 0.9 : 0.1);
    }
    return out;
  };
  return m;
}

VideoDataset toy_test(std::size_t n) {
  VideoDataset d;
  for (std::size_t i = 0; i < n; ++i) d.samples.push_back({Tensor<float>(Shape{1, 2, 2, 2}, 1.0f), "caption " + std::to_string(i % 3)});
  return d;
}

}  // namespace

TEST(ClassificationError, CountExamples) {
  std::vector<LabeledScore> real_high(5, {0.9, true}), real_low(5, {0.1, true});
  EXPECT_EQ(classification_error(real_high), 0.0);
  EXPECT_EQ(classification_error(real_low), 1.0);
  std::vector<LabeledScore> mixed{{0.9, true}, {0.2, false}, {0.7, true}, {0.6, false}};
  EXPECT_EQ(classification_error(mixed), 0.25);
  std::vector<LabeledScore> edge{{0.5, true}, {0.5, false}};
  EXPECT_EQ(classification_error(edge), 0.5);
  EXPECT_THROW(classification_error(std::vector<LabeledScore>{}), InputError);
}

TEST(JudgeWinner, PublishedBattles) {
  EXPECT_EQ(judge_winner(1.08, 0.89), Verdict::kM1);
  EXPECT_EQ(judge_winner(1.09, 0.39), Verdict::kM1);
  EXPECT_EQ(judge_winner(0.96, 0.53), Verdict::kM1);
  EXPECT_EQ(judge_winner(1.5, 0.5), Verdict::kTie);
  EXPECT_EQ(judge_winner(1.0, 1.0), Verdict::kTie);
  EXPECT_EQ(judge_winner(1.0, 2.0), Verdict::kM2);
  EXPECT_EQ(judge_winner(1.1, 0.5, 0.1), Verdict::kM1);
  EXPECT_EQ(judge_winner(1.11, 0.5, 0.1), Verdict::kTie);
  EXPECT_EQ(judge_winner(1.5, 0.5, 0.5), Verdict::kM1);
}

TEST(JudgeWinner, RejectsNonpositiveRatios) {
  EXPECT_THROW(judge_winner(0.0, 0.5), InputError);
  EXPECT_THROW(judge_winner(1.0, -1.0), InputError);
  EXPECT_THROW(judge_winner(std::nan(""), 1.0), InputError);
  EXPECT_THROW(judge_winner(1.0, 1.0, -0.1), InputError);
}

TEST(JudgeWinner, AntisymmetricUnderSwap) {
  Rng rng(11);
  const auto swap = [](Verdict v) { return v == Verdict::kM1 ? Verdict::kM2 : v == Verdict::kM2 ? Verdict::kM1 : v; };
  for (int i = 0; i < 1000; ++i) {
    const double rt = std::exp(rng.uniform(-0.3, 0.3)), rs = std::exp(rng.uniform(-1.0, 1.0));
    EXPECT_EQ(judge_winner(1 / rt, 1 / rs), swap(judge_winner(rt, rs))) << rt << " " << rs;
  }
}

TEST(Report, RatiosFromInjectedRates) {
  const auto r = report_from_rates(0.1, 0.1, 0.2, 0.4, 100, 50);
  EXPECT_DOUBLE_EQ(r.r_test, 1.0);
  EXPECT_DOUBLE_EQ(r.r_sample, 0.5);
  EXPECT_EQ(r.winner, Verdict::kM1);
  EXPECT_FALSE(r.smoothed);
  const auto table = report_from_rates(0.109, 0.1, 0.039, 0.1, 100, 100);
  EXPECT_NEAR(table.r_test, 1.09, 1e-12);
  EXPECT_NEAR(table.r_sample, 0.39, 1e-12);
  EXPECT_EQ(table.winner, Verdict::kM1);
}

TEST(Report, ZeroRatesAreSmoothed) {
  const auto r = report_from_rates(0.0, 0.0, 0.0, 0.25, 10, 4);
  EXPECT_TRUE(r.smoothed);
  EXPECT_DOUBLE_EQ(r.r_test, 1.0);
  EXPECT_DOUBLE_EQ(r.r_sample, (1.0 / 8) / 0.25);
  EXPECT_EQ(r.winner, Verdict::kM1);
  EXPECT_THROW(report_from_rates(0.0, 0.1, 0.1, 0.1, 0, 4), InputError);
}

TEST(Battle, SameModelTwiceIsTie) {
  const auto m = toy(0.0f, 0.5);
  const auto r = battle(m, m, toy_test(12), 20, 3);
  EXPECT_DOUBLE_EQ(r.r_test, 1.0);
  EXPECT_DOUBLE_EQ(r.r_sample, 1.0);
  EXPECT_EQ(r.winner, Verdict::kTie);
  EXPECT_EQ(r.n_test, 24u);
  EXPECT_EQ(r.n_samples, 20u);
}

TEST(Battle, BetterForgerLowersSampleRatioAndSwapMirrors) {
  // m1 forges convincing videos; both judges accept anything above 0.5.
  const auto m1 = toy(0.9f, 0.5), m2 = toy(0.0f, 0.5);
  const auto a = battle(m1, m2, toy_test(10), 16, 5);
  EXPECT_DOUBLE_EQ(a.e1_on_g2, 0.0);
  EXPECT_DOUBLE_EQ(a.e2_on_g1, 1.0);
  EXPECT_LT(a.r_sample, 1.0);
  EXPECT_TRUE(a.smoothed);
  EXPECT_EQ(a.winner, judge_winner(a.r_test, a.r_sample));
  const auto b = battle(m2, m1, toy_test(10), 16, 5);
  EXPECT_NEAR(b.r_test, 1 / a.r_test, 1e-12);
  EXPECT_NEAR(b.r_sample, 1 / a.r_sample, 1e-12);
  EXPECT_EQ(b.winner, judge_winner(b.r_test, b.r_sample));
  EXPECT_EQ(b.e1_on_g2, a.e2_on_g1);
  EXPECT_EQ(b.e2_test, a.e1_test);
}

TEST(Battle, DeterministicAndReported) {
  const auto m1 = toy(0.45f, 0.5), m2 = toy(0.55f, 0.6);
  const auto a = battle(m1, m2, toy_test(9), 33, 8), b = battle(m1, m2, toy_test(9), 33, 8);
  EXPECT_EQ(battle_csv_row(a), battle_csv_row(b));
  EXPECT_EQ(battle_csv_header().substr(0, 7), "e1_test");
  EXPECT_NE(battle_text(a).find("winner: "), std::string::npos);
}

TEST(Battle, Errors) {
  const auto m = toy(0.0f, 0.5);
  auto other = toy(0.0f, 0.5);
  other.video_shape = {1, 2, 2, 3};
  EXPECT_THROW(battle(m, other, toy_test(4), 4, 1), DimensionError);
  EXPECT_THROW(battle(m, m, VideoDataset{}, 4, 1), InputError);
  EXPECT_THROW(battle(m, m, toy_test(4), 0, 1), InputError);
}

TEST(Battle, CheckpointBackedModelAgainstItself) {
  auto cfg = preset_config("desk");
  cfg.model.s_dim = 8;
  cfg.model.p_dim = 4;
  cfg.model.z_dim = 3;
  cfg.model.g_seed = {4, 1, 2, 2};
  cfg.model.g_channels = {4, 2, 1};
  cfg.model.d_channels = {2, 2, 4};
  Rng rng(2);
  auto ck = std::make_shared<Checkpoint>();
  ck->config = cfg;
  ck->generator = Generator<float>(cfg.model, rng);
  ck->discriminators = Discriminators<float>(cfg.model, rng);
  auto enc = std::make_shared<TextEncoder<float>>(Vocabulary::build({"digit 0 is moving up and down."}),
                                                  TextEncoderConfig{4, 8}, rng);
  const auto m = battle_model(ck, enc);
  EXPECT_EQ(m.video_shape, (Shape{1, 8, 16, 16}));
  VideoDataset test;
  for (int i = 0; i < 70; ++i) test.samples.push_back({Tensor<float>(Shape{1, 8, 16, 16}, -1.0f), "digit 0 is moving up and down."});
  const auto r = battle(m, m, test, 70, 4);
  EXPECT_EQ(r.winner, Verdict::kTie);
  EXPECT_DOUBLE_EQ(r.r_sample, 1.0);
  auto wide = std::make_shared<TextEncoder<float>>(Vocabulary::build({"x"}), TextEncoderConfig{4, 9}, rng);
  EXPECT_THROW(battle_model(ck, wide), ConfigError);
}
