#include <gtest/gtest.h>

#include "tgc/core/init.hpp"
#include "tgc/model/discriminators.hpp"

using namespace tgc;

namespace {

ModelConfig desk() { return preset_config("desk").model; }

Var<float> uniform_input(Shape s, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng r(seed);
  return Var<float>::constant(init_uniform<float>(std::move(s), lo, hi, r));
}

Discriminators<float> make(std::uint64_t seed, double init_std = 0.02) {
  auto cfg = desk();
  cfg.init_std = init_std;
  Rng rng(seed);
  return Discriminators<float>(cfg, rng);
}

void zero_head(Discriminators<float>& d, const std::string& head) {
  for (const char* p : {".out.w", ".out.b"}) {
    auto v = d.params().get(head + p);
    v.mutable_value().fill(0.0f);
  }
}

}  // namespace

TEST(FeatureShapes, PaperScale) {
  const auto cfg = preset_config("paper").model;
  EXPECT_EQ(video_feature_shape(cfg), (Shape{512, 1, 3, 3}));
  EXPECT_EQ(frame_feature_shape(cfg), (Shape{512, 3, 3}));
  Rng rng(1);
  Discriminators<float> d(cfg, rng);
  EXPECT_EQ(d.video_feature_shape(), (Shape{512, 1, 3, 3}));
  EXPECT_EQ(d.frame_feature_shape(), (Shape{512, 3, 3}));
}

TEST(FeatureShapes, DeskScale) {
  auto d = make(1);
  EXPECT_EQ(d.video_feature_shape(), (Shape{32, 1, 2, 2}));
  EXPECT_EQ(d.frame_feature_shape(), (Shape{32, 2, 2}));
  const auto v = uniform_input({2, 1, 8, 16, 16}, 2);
  EXPECT_EQ(d.video_features(v, NormMode::kTrain, false).shape(), (Shape{2, 32, 1, 2, 2}));
  EXPECT_EQ(d.frame_features(Discriminators<float>::frames_of(v), NormMode::kTrain, false).shape(),
            (Shape{16, 32, 2, 2}));
}

TEST(Scores, ZeroFinalLayerGivesOneHalf) {
  auto d = make(3, 0.5);
  for (const char* h : {"v", "f", "m"}) zero_head(d, h);
  const auto v = uniform_input({2, 1, 8, 16, 16}, 4);
  const auto s = uniform_input({2, 256}, 5);
  const auto vs = d.video_score(v, s, NormMode::kTrain, false);
  for (float x : vs.value().data()) EXPECT_EQ(x, 0.5f);
  const auto fe = d.frame_scores(v, s, NormMode::kTrain, false);
  for (float x : fe.scores.value().data()) EXPECT_EQ(x, 0.5f);
  const auto m = Discriminators<float>::motions_from_features(fe.features, 2, 8);
  const auto ms = d.motion_scores(m, s, 8);
  EXPECT_EQ(ms.shape(), (Shape{2, 7}));
  for (float x : ms.value().data()) EXPECT_EQ(x, 0.5f);
}

TEST(Scores, OpenUnitIntervalAndCaptionSensitive) {
  auto d = make(6, 0.2);
  const auto v = uniform_input({3, 1, 8, 16, 16}, 7);
  const auto s1 = uniform_input({3, 256}, 8), s2 = uniform_input({3, 256}, 9);
  const auto a = d.video_score(v, s1, NormMode::kTrain, false), b = d.video_score(v, s2, NormMode::kTrain, false);
  EXPECT_EQ(a.shape(), (Shape{3}));
  for (float x : a.value().data()) {
    EXPECT_GT(x, 0.0f);
    EXPECT_LT(x, 1.0f);
  }
  EXPECT_NE(a.value(), b.value());
  const auto fa = d.frame_scores(v, s1, NormMode::kTrain, false).scores;
  const auto fb = d.frame_scores(v, s2, NormMode::kTrain, false).scores;
  EXPECT_EQ(fa.shape(), (Shape{3, 8}));
  EXPECT_NE(fa.value(), fb.value());
}

TEST(Scores, FrameScoresEqualPerFrameEvaluation) {
  auto d = make(10, 0.2);
  const auto v = uniform_input({2, 1, 8, 16, 16}, 11);
  const auto s = uniform_input({2, 256}, 12);
  const auto all = d.frame_scores(v, s, NormMode::kInference, false).scores;
  const auto frames = Discriminators<float>::frames_of(v);
  for (std::size_t b = 0; b < 2; ++b) {
    const auto sb = slice(s, 0, b, b + 1);
    for (std::size_t t = 0; t < 8; ++t) {
      const auto one = d.frame_score(slice(frames, 0, b * 8 + t, b * 8 + t + 1), sb, NormMode::kInference, false);
      EXPECT_NEAR(one.value()[0], all.value()[b * 8 + t], 1e-6);
    }
  }
}

TEST(Scores, IdenticalFramesScoreIdentically) {
  auto d = make(13, 0.2);
  Tensor<float> f = uniform_input({1, 1, 16, 16}, 14).value();
  Tensor<float> two(Shape{2, 1, 16, 16});
  std::copy_n(f.ptr(), 256, two.ptr());
  std::copy_n(f.ptr(), 256, two.ptr() + 256);
  const auto s = uniform_input({1, 256}, 15).value();
  Tensor<float> ss(Shape{2, 256});
  std::copy_n(s.ptr(), 256, ss.ptr());
  std::copy_n(s.ptr(), 256, ss.ptr() + 256);
  const auto r = d.frame_score(Var<float>::constant(two), Var<float>::constant(ss), NormMode::kInference, false);
  EXPECT_EQ(r.value()[0], r.value()[1]);
}

TEST(Motion, SelfDifferenceIsZeroAndSwapNegates) {
  auto d = make(16, 0.2);
  const auto a = uniform_input({3, 1, 16, 16}, 17), b = uniform_input({3, 1, 16, 16}, 18);
  const auto aa = d.motion_features(a, a);
  for (float x : aa.value().data()) EXPECT_EQ(x, 0.0f);
  const auto ab = d.motion_features(a, b), ba = d.motion_features(b, a);
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_EQ(ab.value()[i], -ba.value()[i]);
  const auto fa = d.frame_features(a, NormMode::kInference, false), fb = d.frame_features(b, NormMode::kInference, false);
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_EQ(ab.value()[i], fa.value()[i] - fb.value()[i]);
  EXPECT_THROW(d.motion_features(a, uniform_input({2, 1, 16, 16}, 1)), DimensionError);
}

TEST(Motion, SharedFeaturePathMatchesPairwiseDifferences) {
  auto d = make(19, 0.2);
  const std::size_t B = 2, L = 8;
  const auto v = uniform_input({B, 1, L, 16, 16}, 20);
  const auto fe = d.frame_scores(v, uniform_input({B, 256}, 21), NormMode::kInference, false);
  const auto m = Discriminators<float>::motions_from_features(fe.features, B, L);
  EXPECT_EQ(m.shape(), (Shape{B * (L - 1), 32, 2, 2}));
  const auto frames = Discriminators<float>::frames_of(v);
  const auto& feats = fe.features.value();
  const std::size_t msz = 32 * 4;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 1; i < L; ++i) {
      const std::size_t row = b * (L - 1) + i - 1, cur = b * L + i;
      for (std::size_t k = 0; k < msz; ++k) {
        ASSERT_EQ(m.value()[row * msz + k], feats[cur * msz + k] - feats[(cur - 1) * msz + k]);
      }
      const auto direct = d.motion_features(slice(frames, 0, cur, cur + 1), slice(frames, 0, cur - 1, cur));
      for (std::size_t k = 0; k < msz; ++k) ASSERT_NEAR(direct.value()[k], m.value()[row * msz + k], 1e-5);
    }
  }
  EXPECT_THROW(Discriminators<float>::motions_from_features(fe.features, B * L, 1), PreconditionError);
}

TEST(Errors, ShapeMismatches) {
  auto d = make(22);
  const auto s = uniform_input({2, 256}, 23);
  EXPECT_THROW(d.video_score(uniform_input({2, 1, 8, 16, 8}, 1), s, NormMode::kTrain, false), DimensionError);
  EXPECT_THROW(d.video_score(uniform_input({2, 1, 8, 16, 16}, 1), uniform_input({2, 255}, 1), NormMode::kTrain, false),
               DimensionError);
  EXPECT_THROW(d.frame_score(uniform_input({2, 1, 16, 16}, 1), uniform_input({3, 256}, 1), NormMode::kTrain, false),
               DimensionError);
  EXPECT_THROW(d.motion_scores(uniform_input({5, 32, 2, 2}, 1), s, 8), DimensionError);
}
