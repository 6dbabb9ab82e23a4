#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "tgc/core/adam.hpp"
#include "tgc/core/conv.hpp"
#include "tgc/core/gradcheck.hpp"
#include "tgc/core/init.hpp"
#include "tgc/core/norm.hpp"
#include "tgc/core/ops.hpp"
#include "tgc/core/serialize.hpp"

using namespace tgc;

namespace {

Var<double> leaf(Shape s, std::vector<double> v, bool grad = true) {
  return Var<double>::leaf(Tensor<double>(std::move(s), std::move(v)), grad);
}

Tensor<double> random_tensor(const Shape& s, Rng& rng, double scale = 1.0) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

/// Keeps values away from the kinks of relu-style functions.
Tensor<double> random_away_from_zero(const Shape& s, Rng& rng) {
  Tensor<double> t(s);
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.05, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor<float>(Shape{0}), DimensionError);
  Tensor<float> t(Shape{2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_FLOAT_EQ(t.sum(), 9.0f);
}

TEST(Linear, IdentityWeights) {
  auto x = leaf({1, 2}, {1, 2});
  auto w = leaf({2, 2}, {1, 0, 0, 1});
  auto y = linear(x, w);
  EXPECT_EQ(y.value().storage(), (std::vector<double>{1, 2}));
}

TEST(Linear, ZeroWeightsWithBias) {
  auto y = linear(leaf({1, 2}, {1, 2}), leaf({2, 2}, {0, 0, 0, 0}), leaf({2}, {3, 4}));
  EXPECT_EQ(y.value().storage(), (std::vector<double>{3, 4}));
}

TEST(Linear, OnesMatrixMatchesHandProduct) {
  auto y = linear(leaf({1, 2}, {1, 2}), leaf({2, 2}, {1, 1, 1, 1}));
  // [1 2] . [[1 1] [1 1]] = [1+2, 1+2]
  EXPECT_EQ(y.value().storage(), (std::vector<double>{3, 3}));
}

TEST(Linear, ShapeMismatchNamesBothShapes) {
  try {
    linear(leaf({1, 3}, {1, 2, 3}), leaf({2, 2}, {1, 0, 0, 1}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1x3]"), std::string::npos);
    EXPECT_NE(msg.find("[2x2]"), std::string::npos);
  }
}

TEST(Conv2d, ScalarKernelScalesInput) {
  auto x = leaf({1, 2, 2}, {1, 2, 3, 4});
  auto k = leaf({1, 1, 1, 1}, {2});
  EXPECT_EQ(conv2d(x, k).value().storage(), (std::vector<double>{2, 4, 6, 8}));
}

TEST(Conv2d, ZeroKernelGivesZero) {
  Rng rng(1);
  auto x = Var<double>::leaf(random_tensor({2, 5, 5}, rng), true);
  auto k = Var<double>::leaf(Tensor<double>(Shape{3, 2, 3, 3}), true);
  auto y = conv2d(x, k, {1, 1}, {1, 1});
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, OnesSumToNine) {
  auto x = Var<double>::leaf(Tensor<double>(Shape{1, 3, 3}, 1.0), false);
  auto k = Var<double>::leaf(Tensor<double>(Shape{1, 1, 3, 3}, 1.0), false);
  auto y = conv2d(x, k);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.value()[0], 9.0);
}

TEST(Conv2d, KernelLargerThanPaddedInput) {
  auto x = Var<double>::constant(Tensor<double>(Shape{1, 2, 2}, 1.0));
  auto k = Var<double>::constant(Tensor<double>(Shape{1, 1, 5, 5}, 1.0));
  EXPECT_THROW(conv2d(x, k, {1, 1}, {1, 1}), DimensionError);
}

TEST(Conv2d, StrideAndPadExtents) {
  auto x = Var<double>::constant(Tensor<double>(Shape{2, 3, 16, 16}, 1.0));
  auto k = Var<double>::constant(Tensor<double>(Shape{8, 3, 4, 4}, 1.0));
  EXPECT_EQ(conv2d(x, k, {2, 2}, {1, 1}).shape(), (Shape{2, 8, 8, 8}));
}

TEST(Conv3d, OnesCubeSumsToEight) {
  auto x = Var<double>::constant(Tensor<double>(Shape{1, 2, 2, 2}, 1.0));
  auto k = Var<double>::constant(Tensor<double>(Shape{1, 1, 2, 2, 2}, 1.0));
  auto y = conv3d(x, k);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.value()[0], 8.0);
}

TEST(Conv3d, UnitKernelIsIdentity) {
  Rng rng(2);
  auto xt = random_tensor({1, 3, 4, 5}, rng);
  auto y = conv3d(Var<double>::constant(xt), Var<double>::constant(Tensor<double>(Shape{1, 1, 1, 1, 1}, 1.0)));
  EXPECT_EQ(y.value(), xt);
}

TEST(Conv3d, ZeroKernel) {
  Rng rng(3);
  auto y = conv3d(Var<double>::constant(random_tensor({2, 4, 4, 4}, rng)),
                  Var<double>::constant(Tensor<double>(Shape{3, 2, 2, 2, 2})));
  EXPECT_DOUBLE_EQ(y.value().squared_norm(), 0.0);
}

TEST(Conv3d, MatchesDirectSummationOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ci = 1 + rng.uniform_index(3), co = 1 + rng.uniform_index(3);
    Triple k{1 + rng.uniform_index(2), 1 + rng.uniform_index(3), 1 + rng.uniform_index(3)};
    Triple in{k[0] + rng.uniform_index(4), k[1] + rng.uniform_index(4), k[2] + rng.uniform_index(4)};
    Triple s{1 + rng.uniform_index(2), 1 + rng.uniform_index(2), 1 + rng.uniform_index(2)};
    Triple p{rng.uniform_index(2), rng.uniform_index(2), rng.uniform_index(2)};
    auto x = random_tensor({ci, in[0], in[1], in[2]}, rng);
    auto w = random_tensor({co, ci, k[0], k[1], k[2]}, rng);
    auto got = conv3d(Var<double>::constant(x), Var<double>::constant(w), s, p);
    auto want = oracle::conv3d_direct(x, w, s, p);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.value()[i], want[i], 1e-12);
  }
}

// Stride 1, pad 0, one-hot kernel at offset (a,b,c): output is the slice of
// the input starting at that offset.
TEST(Conv3d, OneHotKernelReproducesShiftedSlice) {
  Rng rng(5);
  for (std::size_t L = 1; L <= 4; ++L) {
    for (std::size_t kk = 1; kk <= L; ++kk) {
      auto x = random_tensor({1, L, 4, 4}, rng);
      for (std::size_t a = 0; a < kk; ++a) {
        for (std::size_t b = 0; b < kk; ++b) {
          Tensor<double> k(Shape{1, 1, kk, kk, kk});
          const std::size_t c = (a + b) % kk;
          k[(a * kk + b) * kk + c] = 1.0;
          auto y = conv3d(Var<double>::constant(x), Var<double>::constant(k));
          const std::size_t oL = L - kk + 1, oH = 4 - kk + 1, oW = 4 - kk + 1;
          for (std::size_t i = 0; i < oL; ++i)
            for (std::size_t j = 0; j < oH; ++j)
              for (std::size_t l = 0; l < oW; ++l)
                ASSERT_EQ(y.value()[(i * oH + j) * oW + l], x[((i + a) * 4 + (j + b)) * 4 + (l + c)]);
        }
      }
    }
  }
}

TEST(Conv3dTransposed, SingleVoxelScattersKernel) {
  auto x = Var<double>::constant(Tensor<double>(Shape{1, 1, 1, 1}, 5.0));
  auto k = Var<double>::constant(Tensor<double>(Shape{1, 1, 2, 2, 2}, 1.0));
  auto y = conv3d_transposed(x, k, {2, 2, 2});
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2, 2}));
  for (double v : y.value().data()) EXPECT_EQ(v, 5.0);
}

TEST(Conv3dTransposed, ZeroInput) {
  Rng rng(6);
  auto y = conv3d_transposed(Var<double>::constant(Tensor<double>(Shape{2, 2, 3, 3})),
                             Var<double>::constant(random_tensor({2, 3, 4, 4, 4}, rng)), {2, 2, 2}, {1, 1, 1});
  EXPECT_DOUBLE_EQ(y.value().squared_norm(), 0.0);
}

TEST(Conv3dTransposed, ExtentFormula) {
  EXPECT_EQ(transposed_extent(2, 4, 2, 1, 0), 4u);
  auto y = conv3d_transposed(Var<double>::constant(Tensor<double>(Shape{1, 2, 3, 3}, 1.0)),
                             Var<double>::constant(Tensor<double>(Shape{1, 1, 4, 4, 4}, 1.0)), {2, 2, 2}, {1, 1, 1});
  EXPECT_EQ(y.shape(), (Shape{1, 4, 6, 6}));
  EXPECT_THROW(transposed_extent(1, 1, 1, 1, 0), DimensionError);
}

TEST(Conv3dTransposed, MatchesScatterOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ci = 1 + rng.uniform_index(3), co = 1 + rng.uniform_index(3);
    Triple in{1 + rng.uniform_index(3), 1 + rng.uniform_index(3), 1 + rng.uniform_index(3)};
    Triple k{2 + rng.uniform_index(3), 2 + rng.uniform_index(3), 2 + rng.uniform_index(3)};
    Triple s{1 + rng.uniform_index(2), 1 + rng.uniform_index(2), 1 + rng.uniform_index(2)};
    Triple p{rng.uniform_index(k[0] / 2 + 1), rng.uniform_index(k[1] / 2 + 1), rng.uniform_index(k[2] / 2 + 1)};
    for (int d = 0; d < 3; ++d) {
      p[d] = std::min<std::size_t>(p[d], 1);
      if ((in[d] - 1) * s[d] + k[d] <= 2 * p[d]) p[d] = 0;
    }
    auto x = random_tensor({ci, in[0], in[1], in[2]}, rng);
    auto w = random_tensor({ci, co, k[0], k[1], k[2]}, rng);
    auto want = oracle::conv3d_transposed_scatter(x, w, s, p);
    auto got = conv3d_transposed(Var<double>::constant(x), Var<double>::constant(w), s, p);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.value()[i], want[i], 1e-12);
  }
}

TEST(Activations, ValuesAndRanges) {
  auto x = leaf({3}, {-1.0, 0.0, 2.0});
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.2).value()[0], -0.2);
  EXPECT_DOUBLE_EQ(sigmoid(x).value()[1], 0.5);
  EXPECT_DOUBLE_EQ(relu(x).value()[0], 0.0);
  Rng rng(8);
  auto big = Var<double>::constant(random_tensor({200}, rng, 30.0));
  for (double v : sigmoid(big).value().data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : tgc::tanh(Var<double>::constant(random_tensor({200}, rng, 3.0))).value().data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(BatchNorm, TwoSampleStandardization) {
  auto x = leaf({2}, {1, 3});
  auto y = batch_norm(x, leaf({1}, {1}), leaf({1}, {0}), 0.0);
  // mean 2, biased variance 1
  EXPECT_DOUBLE_EQ(y.value()[0], -1.0);
  EXPECT_DOUBLE_EQ(y.value()[1], 1.0);
}

TEST(BatchNorm, BatchOfOneRejectedInTraining) {
  auto x = leaf({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_THROW(batch_norm(x, leaf({2}, {1, 1}), leaf({2}, {0, 0}), 1e-5), PreconditionError);
}

TEST(BatchNorm, RunningStatisticsAndInference) {
  RunningStats<double> stats(1, 0.99);
  auto x = leaf({2, 1}, {1, 3});
  batch_norm(x, leaf({1}, {1}), leaf({1}, {0}), 0.0, NormMode::kTrain, &stats);
  EXPECT_NEAR(stats.mean[0], 0.01 * 2.0, 1e-15);
  EXPECT_NEAR(stats.var[0], 0.99 + 0.01 * 1.0, 1e-15);
  auto y = batch_norm(Var<double>::constant(Tensor<double>(Shape{1, 1}, 2.0)), leaf({1}, {1}), leaf({1}, {0}), 0.0,
                      NormMode::kInference, &stats);
  EXPECT_NEAR(y.value()[0], (2.0 - 0.02) / std::sqrt(1.0), 1e-12);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(9);
  auto x = Var<double>::leaf(random_tensor({3, 4}, rng), true);
  backward(sum(x));
  for (double g : x.grad().data()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SigmoidAtZero) {
  auto x = leaf({1}, {0.0});
  backward(sigmoid(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.25);
}

TEST(Backward, RepeatedCallsAccumulate) {
  auto x = leaf({2}, {1.0, -2.0});
  auto y = sum(square(x));
  backward(y);
  backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -8.0);
}

TEST(Backward, NonScalarRootIsContractError) {
  auto x = leaf({2}, {1.0, 2.0});
  EXPECT_THROW(backward(square(x)), ContractError);
}

TEST(Backward, SharedNodeAccumulatesBothConsumers) {
  Rng rng(10);
  const auto x0 = random_tensor({5}, rng);
  auto f = [](const Var<double>& x) {
    auto t = tgc::tanh(x);  // feeds two consumers
    return sum(add(mul(t, t), scale(t, 3.0)));
  };
  auto x = Var<double>::leaf(x0, true);
  backward(f(x));
  auto numeric = oracle::central_difference(
      [&](const Tensor<double>& v) { return f(Var<double>::constant(v)).value().item(); }, x0);
  EXPECT_LT(oracle::max_relative_error(x.grad(), numeric), 1e-8);
}

// Gradient suite for each primitive against central differences.
class PrimitiveGradients : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradients, MatchFiniteDifferences) {
  Rng rng(100 + GetParam());
  const auto a = Var<double>::leaf(random_away_from_zero({2, 3, 4, 4}, rng), true);
  const auto b = Var<double>::leaf(random_tensor({2, 3, 4, 4}, rng), true);
  const auto w = Var<double>::leaf(random_tensor({3, 5}, rng), true);
  const auto bias = Var<double>::leaf(random_tensor({5}, rng), true);
  const auto k2 = Var<double>::leaf(random_tensor({2, 3, 3, 3}, rng), true);
  const auto k3 = Var<double>::leaf(random_tensor({2, 3, 2, 2, 2}, rng), true);
  const auto kt = Var<double>::leaf(random_tensor({3, 2, 2, 3, 3}, rng), true);
  const auto gamma = Var<double>::leaf(random_tensor({3}, rng), true);
  const auto beta = Var<double>::leaf(random_tensor({3}, rng), true);
  const auto table = Var<double>::leaf(random_tensor({6, 4}, rng), true);
  const auto proj = Var<double>::leaf(random_tensor({4, 5}, rng), true);
  const auto probs = Var<double>::leaf(init_uniform<double>({7}, 0.05, 0.95, rng), true);
  const auto weights = random_tensor({2, 3, 4, 4}, rng);
  const auto wsum = [&](const Var<double>& v) {
    Tensor<double> c(v.shape());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = weights[i % weights.size()] + 0.1 * static_cast<double>(i % 7);
    return sum(mul(v, Var<double>::constant(c)));
  };
  const std::size_t idx[] = {1, 5, 0, 3};
  struct Case {
    const char* name;
    std::function<Var<double>()> fn;
    std::vector<Var<double>> leaves;
  };
  std::vector<Case> cases = {
      {"relu", [&] { return wsum(relu(a)); }, {a}},
      {"leaky_relu", [&] { return wsum(leaky_relu(a, 0.2)); }, {a}},
      {"sigmoid", [&] { return wsum(sigmoid(b)); }, {b}},
      {"tanh", [&] { return wsum(tgc::tanh(b)); }, {b}},
      {"mul_sub_add", [&] { return wsum(add(mul(a, b), sub(b, a))); }, {a, b}},
      {"linear", [&] { return wsum(linear(reshape(slice(b, 1, 0, 3), {32, 3}), w, bias)); }, {b, w, bias}},
      {"conv2d", [&] { return wsum(conv2d(b, k2, {1, 1}, {1, 1})); }, {b, k2}},
      {"conv3d", [&] { return wsum(conv3d(reshape(b, {1, 3, 2, 4, 4}), k3, {1, 2, 2}, {1, 0, 1})); }, {b, k3}},
      {"conv3d_transposed",
       [&] { return wsum(conv3d_transposed(reshape(b, {1, 3, 2, 4, 4}), kt, {2, 2, 2}, {1, 1, 1})); }, {b, kt}},
      {"batch_norm", [&] { return wsum(batch_norm(b, gamma, beta, 1e-5)); }, {b, gamma, beta}},
      {"transpose_concat",
       [&] { return wsum(concat<double>({transpose(a, 1, 2), transpose(b, 1, 2)}, 3)); }, {a, b}},
      {"replicate_spatial", [&] { return wsum(replicate_spatial(linear(reshape(slice(b, 1, 0, 1), {2, 16}), reshape(slice(b, 0, 0, 1), {16, 3})), {2, 2, 2})); }, {b}},
      {"embedding_ce",
       [&] { return softmax_cross_entropy(linear(embedding<double>(idx, table), proj), std::vector<std::size_t>{0, 4, 2, 1}); },
       {table, proj}},
      {"clamped_logs", [&] { return sum(add(clamped_log(probs, 1e-7), scale(clamped_log1m(probs, 1e-7), 0.7))); }, {probs}},
      {"sum_per_row", [&] { return wsum(reshape(sum_per_row(square(b)), {2, 1, 1, 1})); }, {b}},
  };
  for (auto& c : cases) {
    auto r = gradcheck(c.fn, c.leaves, rng, {});
    EXPECT_LT(r.max_rel_error, 1e-4) << c.name;
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, PrimitiveGradients, ::testing::Range(0, 5));

TEST(Adjoint, ConvAndTransposedConv) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ci = 1 + rng.uniform_index(3), co = 1 + rng.uniform_index(3);
    Triple in{}, k{}, s{}, p{}, op{};
    for (int d = 0; d < 3; ++d) {
      k[d] = 1 + rng.uniform_index(4);
      in[d] = k[d] + rng.uniform_index(5);
      s[d] = 1 + rng.uniform_index(2);
      p[d] = rng.uniform_index(std::min<std::size_t>(k[d], 2));
    }
    auto x = random_tensor({ci, in[0], in[1], in[2]}, rng);
    auto w = random_tensor({co, ci, k[0], k[1], k[2]}, rng);
    auto y = conv3d(Var<double>::constant(x), Var<double>::constant(w), s, p);
    for (int d = 0; d < 3; ++d) op[d] = (in[d] + 2 * p[d] - k[d]) % s[d];
    auto r = random_tensor(y.shape(), rng);
    auto xt = conv3d_transposed(Var<double>::constant(r), Var<double>::constant(w), s, p, op);
    ASSERT_EQ(xt.shape(), x.shape());
    EXPECT_NEAR(dot(y.value(), r), dot(x, xt.value()), 1e-6);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor<float> p(Shape{3}, 0.5f), g(Shape{3});
  AdamState<float> st;
  Tensor<float>* ps[] = {&p};
  const Tensor<float>* gs[] = {&g};
  adam_step<float>(ps, gs, st);
  for (float v : p.data()) EXPECT_EQ(v, 0.5f);
  EXPECT_EQ(st.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<double> p(Shape{1}, 0.0), g(Shape{1}, 1.0);
  AdamState<double> st(AdamConfig{0.0002, 0.9, 0.999, 1e-8});
  Tensor<double>* ps[] = {&p};
  const Tensor<double>* gs[] = {&g};
  adam_step<double>(ps, gs, st);
  // m = 0.1, v = 0.001, mhat = vhat = 1 -> step = lr / (1 + eps)
  EXPECT_NEAR(p[0], -0.0002 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ShapeMismatch) {
  Tensor<float> p(Shape{3}), g(Shape{2});
  AdamState<float> st;
  Tensor<float>* ps[] = {&p};
  const Tensor<float>* gs[] = {&g};
  EXPECT_THROW(adam_step<float>(ps, gs, st), DimensionError);
}

TEST(Adam, DeterministicRuns) {
  auto run = [] {
    Rng rng(42);
    Tensor<float> p = init_normal<float>({16}, 0.02, rng);
    AdamState<float> st;
    for (int i = 0; i < 10; ++i) {
      Tensor<float> g = init_normal<float>({16}, 1.0, rng);
      Tensor<float>* ps[] = {&p};
      const Tensor<float>* gs[] = {&g};
      adam_step<float>(ps, gs, st);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(InitNormal, SeededAndCalibrated) {
  Rng a(5), b(5);
  EXPECT_EQ(init_normal<float>({64}, 0.02, a), init_normal<float>({64}, 0.02, b));
  Rng rng(6);
  auto t = init_normal<double>({100000}, 0.02, rng);
  const double m = t.sum() / 1e5;
  double var = 0;
  for (double v : t.data()) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / (1e5 - 1));
  EXPECT_GE(sd, 0.019);
  EXPECT_LE(sd, 0.021);
  EXPECT_THROW(init_normal<float>({4}, 0.0, rng), PreconditionError);
}

TEST(Rng, StateRoundTripContinuesStream) {
  Rng a(77);
  a.normal();  // leaves a cached spare
  const auto saved = a.state();
  const double n1 = a.normal(), n2 = a.normal();
  Rng b(0);
  b.set_state(saved);
  EXPECT_EQ(b.normal(), n1);
  EXPECT_EQ(b.normal(), n2);
}

TEST(Serialization, ContainerLayoutAndRoundTrip) {
  Rng rng(12);
  auto t = init_normal<float>({2, 3, 4}, 1.0, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4 + 1 + 1 + 4 + 3 * 4 + 24 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "TGCT");
  EXPECT_EQ(static_cast<int>(bytes[4]), 1);
  EXPECT_EQ(static_cast<int>(bytes[5]), 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 3);  // rank, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 2);
  EXPECT_EQ(read_tensor<float>(ss), t);

  std::stringstream bad("TGCX");
  EXPECT_THROW(read_tensor<float>(bad), FormatError);
  std::stringstream truncated(bytes.substr(0, 20));
  EXPECT_THROW(read_tensor<float>(truncated), FormatError);
}
