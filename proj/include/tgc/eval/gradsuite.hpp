#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tgc/core/conv.hpp"
#include "tgc/core/gradcheck.hpp"
#include "tgc/core/init.hpp"
#include "tgc/core/norm.hpp"
#include "tgc/model/discriminators.hpp"
#include "tgc/model/generator.hpp"
#include "tgc/text/lstm.hpp"
#include "tgc/train/losses.hpp"

namespace tgc {

struct GradInstance {
  std::function<Var<double>()> loss;
  std::vector<Var<double>> leaves;
  std::shared_ptr<void> keep_alive;  // models the loss closes over
};

struct GradCase {
  std::string name;
  std::function<GradInstance(Rng&)> make;
};

struct GradCaseResult {
  std::string name;
  std::size_t instances = 0, coordinates = 0, kinks = 0;
  double max_rel_error = 0;
  bool pass = false;
};

namespace gradsuite {

inline std::size_t dim(Rng& r, std::size_t lo, std::size_t hi) { return lo + r.uniform_index(hi - lo + 1); }

inline Var<double> leaf(Shape s, Rng& r, double lo = -1, double hi = 1) {
  return Var<double>::leaf(init_uniform<double>(std::move(s), lo, hi, r), true);
}

/// Values bounded away from zero so that kinks are not straddled.
inline Var<double> leaf_off_zero(Shape s, Rng& r) {
  Tensor<double> t = init_uniform<double>(std::move(s), 0.1, 1.0, r);
  for (auto& v : t.data()) v = r.uniform() < 0.5 ? -v : v;
  return Var<double>::leaf(std::move(t), true);
}

/// Weighted sum with fixed random weights, so every output cell matters.
inline std::function<Var<double>(const Var<double>&)> weigher(Rng& r) {
  auto seed = r.next();
  return [seed](const Var<double>& v) {
    Rng w(seed);
    return sum(mul(v, Var<double>::constant(init_uniform<double>(v.shape(), -1, 1, w))));
  };
}

inline GradInstance unary(Rng& r, const std::function<Var<double>(const Var<double>&)>& f, bool off_zero = false) {
  const Shape s{dim(r, 1, 3), dim(r, 1, 4), dim(r, 1, 4)};
  auto x = off_zero ? leaf_off_zero(s, r) : leaf(s, r, -2, 2);
  auto w = weigher(r);
  return {[=] { return w(f(x)); }, {x}, nullptr};
}

inline ModelConfig tiny_model(Rng& r) {
  ModelConfig c;
  c.channels = dim(r, 1, 2);
  c.frames = 4;
  c.height = c.width = 8;
  c.z_dim = 3;
  c.s_dim = 4;
  c.p_dim = 3;
  c.g_seed = {3, 1, 2, 2};
  c.g_channels = {2, c.channels};
  c.g_strides = {{2, 2, 2}, {2, 2, 2}};
  c.d_channels = {2, 3};
  c.cond_dim = 2;
  c.head_channels = 3;
  c.init_std = 0.5;
  return c;
}

inline std::vector<GradCase> cases() {
  using V = Var<double>;
  std::vector<GradCase> c;
  const auto add_case = [&](std::string name, std::function<GradInstance(Rng&)> f) { c.push_back({std::move(name), std::move(f)}); };

  add_case("relu", [](Rng& r) { return unary(r, [](const V& x) { return relu(x); }, true); });
  add_case("leaky_relu", [](Rng& r) { return unary(r, [](const V& x) { return leaky_relu(x, 0.2); }, true); });
  add_case("sigmoid", [](Rng& r) { return unary(r, [](const V& x) { return sigmoid(x); }); });
  add_case("tanh", [](Rng& r) { return unary(r, [](const V& x) { return tgc::tanh(x); }); });
  add_case("scale_add_scalar", [](Rng& r) {
    const double a = r.uniform(-2, 2), b = r.uniform(-2, 2);
    return unary(r, [a, b](const V& x) { return add_scalar(scale(x, a), b); });
  });
  add_case("square", [](Rng& r) { return unary(r, [](const V& x) { return square(x); }); });
  add_case("clamped_log", [](Rng& r) {
    auto p = leaf({dim(r, 1, 8)}, r, 0.05, 0.95);
    auto w = weigher(r);
    return GradInstance{[=] { return w(clamped_log(p, 1e-7)); }, {p}, nullptr};
  });
  add_case("clamped_log1m", [](Rng& r) {
    auto p = leaf({dim(r, 1, 8)}, r, 0.05, 0.95);
    auto w = weigher(r);
    return GradInstance{[=] { return w(clamped_log1m(p, 1e-7)); }, {p}, nullptr};
  });
  add_case("add_sub_mul", [](Rng& r) {
    const Shape s{dim(r, 1, 3), dim(r, 1, 5)};
    auto a = leaf(s, r), b = leaf(s, r);
    auto w = weigher(r);
    return GradInstance{[=] { return w(add(mul(a, b), sub(b, a))); }, {a, b}, nullptr};
  });
  add_case("add_n", [](Rng& r) {
    const Shape s{dim(r, 1, 4)};
    auto a = leaf(s, r), b = leaf(s, r), d = leaf(s, r);
    auto w = weigher(r);
    return GradInstance{[=] { return w(add_n<double>({a, b, d, a})); }, {a, b, d}, nullptr};
  });
  add_case("sum_mean", [](Rng& r) {
    auto a = leaf({dim(r, 1, 3), dim(r, 1, 4)}, r);
    return GradInstance{[=] { return add(square(sum(a)), scale(mean(square(a)), 3.0)); }, {a}, nullptr};
  });
  add_case("sum_per_row", [](Rng& r) { return unary(r, [](const V& x) { return sum_per_row(square(x)); }); });
  add_case("linear", [](Rng& r) {
    const std::size_t n = dim(r, 1, 4), a = dim(r, 1, 5), b = dim(r, 1, 5);
    auto x = leaf({n, a}, r), w = leaf({a, b}, r), bias = leaf({b}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(add(linear(x, w, bias), linear(x, w))); }, {x, w, bias}, nullptr};
  });
  add_case("matmul", [](Rng& r) {
    const std::size_t n = dim(r, 1, 4), a = dim(r, 1, 5), b = dim(r, 1, 5);
    auto x = leaf({n, a}, r), w = leaf({a, b}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(matmul(x, w)); }, {x, w}, nullptr};
  });
  add_case("embedding", [](Rng& r) {
    const std::size_t v = dim(r, 2, 6), d = dim(r, 1, 4), n = dim(r, 1, 6);
    auto table = leaf({v, d}, r);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = r.uniform_index(v);
    auto f = weigher(r);
    return GradInstance{[=] { return f(embedding<double>(idx, table)); }, {table}, nullptr};
  });
  add_case("reshape_transpose", [](Rng& r) {
    const std::size_t a = dim(r, 1, 3), b = dim(r, 1, 3), d = dim(r, 1, 3);
    auto x = leaf({a, b, d}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(reshape(transpose(x, 0, 2), {d * b, a})); }, {x}, nullptr};
  });
  add_case("concat", [](Rng& r) {
    const std::size_t a = dim(r, 1, 3), b1 = dim(r, 1, 3), b2 = dim(r, 1, 3), d = dim(r, 1, 3);
    const std::size_t axis = r.uniform_index(2);
    auto x = leaf({a, b1, d}, r), y = leaf(axis == 1 ? Shape{a, b2, d} : Shape{b2, b1, d}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(concat<double>({x, y}, axis == 1 ? 1 : 0)); }, {x, y}, nullptr};
  });
  add_case("slice", [](Rng& r) {
    const std::size_t n = dim(r, 2, 5);
    auto x = leaf({dim(r, 1, 3), n, dim(r, 1, 3)}, r);
    const std::size_t b = r.uniform_index(n - 1), e = b + 1 + r.uniform_index(n - b - 1);
    auto f = weigher(r);
    return GradInstance{[=] { return f(slice(x, 1, b, e)); }, {x}, nullptr};
  });
  add_case("replicate_spatial", [](Rng& r) {
    auto x = leaf({dim(r, 1, 3), dim(r, 1, 3)}, r);
    Shape ext{dim(r, 1, 3), dim(r, 1, 3)};
    auto f = weigher(r);
    return GradInstance{[=] { return f(replicate_spatial(x, ext)); }, {x}, nullptr};
  });
  add_case("add_channel_bias", [](Rng& r) {
    const std::size_t c = dim(r, 1, 4);
    auto x = leaf({dim(r, 1, 3), c, dim(r, 1, 3), dim(r, 1, 3)}, r), b = leaf({c}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(add_channel_bias(x, b)); }, {x, b}, nullptr};
  });
  add_case("repeat_rows", [](Rng& r) {
    auto x = leaf({dim(r, 1, 3), dim(r, 1, 4)}, r);
    const std::size_t k = dim(r, 1, 4);
    auto f = weigher(r);
    return GradInstance{[=] { return f(repeat_rows(x, k)); }, {x}, nullptr};
  });
  add_case("softmax_cross_entropy", [](Rng& r) {
    const std::size_t n = dim(r, 1, 4), v = dim(r, 2, 6);
    auto x = leaf({n, v}, r, -3, 3);
    std::vector<std::size_t> t(n);
    for (auto& i : t) i = r.uniform_index(v);
    return GradInstance{[=] { return softmax_cross_entropy(x, t); }, {x}, nullptr};
  });
  add_case("conv2d", [](Rng& r) {
    const Pair k{dim(r, 1, 3), dim(r, 1, 3)}, s{dim(r, 1, 2), dim(r, 1, 2)}, p{r.uniform_index(2), r.uniform_index(2)};
    const std::size_t ci = dim(r, 1, 3), co = dim(r, 1, 3);
    auto x = leaf({dim(r, 1, 2), ci, k[0] + dim(r, 0, 3), k[1] + dim(r, 0, 3)}, r);
    auto w = leaf({co, ci, k[0], k[1]}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(conv2d(x, w, s, p)); }, {x, w}, nullptr};
  });
  add_case("conv3d", [](Rng& r) {
    Triple k{}, s{}, p{}, in{};
    for (int d = 0; d < 3; ++d) {
      k[d] = dim(r, 1, 3);
      s[d] = dim(r, 1, 2);
      p[d] = r.uniform_index(2);
      in[d] = k[d] + dim(r, 0, 2);
    }
    const std::size_t ci = dim(r, 1, 2), co = dim(r, 1, 3);
    auto x = leaf({dim(r, 1, 2), ci, in[0], in[1], in[2]}, r);
    auto w = leaf({co, ci, k[0], k[1], k[2]}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(conv3d(x, w, s, p)); }, {x, w}, nullptr};
  });
  add_case("conv3d_transposed", [](Rng& r) {
    Triple k{}, s{}, p{}, op{}, in{};
    for (int d = 0; d < 3; ++d) {
      k[d] = dim(r, 1, 4);
      s[d] = dim(r, 1, 2);
      p[d] = r.uniform_index(std::min<std::size_t>(k[d], 2));
      in[d] = dim(r, 1, 3);
      op[d] = s[d] > 1 ? r.uniform_index(s[d]) : 0;
      if (static_cast<long>(in[d] - 1) * static_cast<long>(s[d]) - 2 * static_cast<long>(p[d]) +
              static_cast<long>(k[d] + op[d]) <= 0) {
        p[d] = 0;
      }
    }
    const std::size_t ci = dim(r, 1, 3), co = dim(r, 1, 2);
    auto x = leaf({dim(r, 1, 2), ci, in[0], in[1], in[2]}, r);
    auto w = leaf({ci, co, k[0], k[1], k[2]}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(conv3d_transposed(x, w, s, p, op)); }, {x, w}, nullptr};
  });
  add_case("batch_norm_train", [](Rng& r) {
    const std::size_t c = dim(r, 1, 3);
    auto x = leaf({dim(r, 2, 4), c, dim(r, 1, 3), dim(r, 1, 3)}, r), g = leaf({c}, r, 0.5, 1.5), b = leaf({c}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(batch_norm(x, g, b, 1e-5)); }, {x, g, b}, nullptr};
  });
  add_case("batch_norm_inference", [](Rng& r) {
    const std::size_t c = dim(r, 1, 3);
    auto x = leaf({dim(r, 1, 3), c, dim(r, 1, 3)}, r), g = leaf({c}, r, 0.5, 1.5), b = leaf({c}, r);
    auto stats = std::make_shared<RunningStats<double>>(c);
    for (std::size_t i = 0; i < c; ++i) {
      stats->mean[i] = r.uniform(-1, 1);
      stats->var[i] = r.uniform(0.5, 2);
    }
    auto f = weigher(r);
    return GradInstance{[=] { return f(batch_norm(x, g, b, 1e-5, NormMode::kInference, stats.get())); }, {x, g, b}, stats};
  });
  add_case("lstm_step", [](Rng& r) {
    const std::size_t n = dim(r, 1, 3), in = dim(r, 1, 4), h = dim(r, 1, 4);
    auto ps = std::make_shared<ParamSet<double>>();
    LstmLayer<double>::create(*ps, "l", in, h, r);
    auto x = leaf({n, in}, r), h0 = leaf({n, h}, r), c0 = leaf({n, h}, r);
    auto f = weigher(r);
    std::vector<V> leaves{x, h0, c0};
    for (const auto& p : ps->params()) leaves.push_back(p);
    return GradInstance{[=] {
                          const auto l = LstmLayer<double>::bind(*ps, "l");
                          auto s = lstm_step(l, x, LstmState<double>{h0, c0});
                          s = lstm_step(l, x, s);
                          return add(f(s.h), f(s.c));
                        },
                        leaves, ps};
  });
  add_case("shared_node", [](Rng& r) {
    auto x = leaf({dim(r, 1, 4)}, r);
    return GradInstance{[=] {
                          const auto y = tgc::tanh(x);
                          return sum(add(mul(y, y), scale(y, 2.0)));
                        },
                        {x}, nullptr};
  });

  // Composed losses.
  const auto scores = [](Rng& r, Shape s) { return leaf(std::move(s), r, 0.05, 0.95); };
  add_case("video_matching_loss", [scores](Rng& r) {
    const std::size_t b = dim(r, 1, 4);
    auto p = scores(r, {b}), n = scores(r, {b}), s = scores(r, {b});
    auto f = weigher(r);
    return GradInstance{[=] { return f(matching_loss(p, n, s)); }, {p, n, s}, nullptr};
  });
  add_case("frame_matching_loss", [scores](Rng& r) {
    const std::size_t b = dim(r, 1, 3), l = dim(r, 1, 5);
    auto p = scores(r, {b, l}), n = scores(r, {b, l}), s = scores(r, {b, l});
    auto f = weigher(r);
    return GradInstance{[=] { return f(matching_loss(p, n, s)); }, {p, n, s}, nullptr};
  });
  add_case("coherence_constraint", [](Rng& r) {
    const std::size_t b = dim(r, 1, 3), l = dim(r, 2, 5);
    auto x = leaf({b * l, dim(r, 1, 3), dim(r, 1, 2), dim(r, 1, 2)}, r);
    auto f = weigher(r);
    return GradInstance{[=] { return f(coherence_constraint(x, b, l)); }, {x}, nullptr};
  });
  add_case("coherence_adversarial_loss", [](Rng& r) {
    // Phi2 scores of motion tensors built from frame features.
    const std::size_t b = dim(r, 1, 3), l = dim(r, 2, 4), f = dim(r, 1, 4);
    auto fp = leaf({b * l, f}, r), fn = leaf({b * l, f}, r), fs = leaf({b * l, f}, r), w = leaf({f, 1}, r);
    const auto phi = [=](const V& feats) {
      const auto m = Discriminators<double>::motions_from_features(feats, b, l);
      return reshape(sigmoid(matmul(m, w)), {b, l - 1});
    };
    auto g = weigher(r);
    return GradInstance{[=] { return g(matching_loss(phi(fp), phi(fn), phi(fs))); }, {fp, fn, fs, w}, nullptr};
  });
  for (Scheme sc : {Scheme::kC1, Scheme::kC2, Scheme::kCC, Scheme::kCA}) {
    add_case("discriminator_objective_" + scheme_name(sc), [scores, sc](Rng& r) {
      const std::size_t b = dim(r, 1, 3), l = dim(r, 2, 4);
      std::vector<V> s;
      for (int i = 0; i < 3; ++i) s.push_back(scores(r, {b}));
      for (int i = 0; i < 3; ++i) s.push_back(scores(r, {b, l}));
      for (int i = 0; i < 3; ++i) s.push_back(scores(r, {b, l - 1}));
      return GradInstance{[=] {
                            DiscriminatorTerms<double> t;
                            t.l_v = matching_loss(s[0], s[1], s[2]);
                            t.l_f = matching_loss(s[3], s[4], s[5]);
                            t.l_t = matching_loss(s[6], s[7], s[8]);
                            return discriminator_objective(sc, t);
                          },
                          s, nullptr};
    });
    add_case("generator_objective_" + scheme_name(sc), [scores, sc](Rng& r) {
      const std::size_t b = dim(r, 1, 3), l = dim(r, 2, 4);
      auto d0 = scores(r, {b}), d1 = scores(r, {b, l}), phi = scores(r, {b, l - 1});
      auto feats = leaf({b * l, dim(r, 1, 4)}, r);
      return GradInstance{[=] {
                            GeneratorTerms<double> t;
                            t.log_d0 = mean_log(d0);
                            t.log_d1 = mean_log(d1);
                            t.coherence = coherence_constraint(feats, b, l);
                            t.log_phi2 = mean_log(phi);
                            return generator_objective(sc, t);
                          },
                          {d0, d1, phi, feats}, nullptr};
    });
  }

  // Whole networks at toy width.
  struct Nets {
    ModelConfig cfg;
    Generator<double> g;
    Discriminators<double> d;
  };
  const auto nets = [](Rng& r) {
    auto n = std::make_shared<Nets>();
    n->cfg = tiny_model(r);
    n->g = Generator<double>(n->cfg, r);
    n->d = Discriminators<double>(n->cfg, r);
    // zero biases put exact zeros on activation kinks
    for (auto* ps : {&n->g.params(), &n->d.params()}) {
      for (std::size_t i = 0; i < ps->size(); ++i) {
        const auto& name = ps->names()[i];
        if (name.ends_with(".b") || name.ends_with(".beta")) {
          for (auto& v : ps->values()[i]->data()) v = r.uniform(-0.5, 0.5);
        }
      }
    }
    return n;
  };
  add_case("generator_network", [nets](Rng& r) {
    auto n = nets(r);
    auto z = leaf({2, n->cfg.z_dim}, r), s = leaf({2, n->cfg.s_dim}, r);
    auto f = weigher(r);
    std::vector<V> leaves{z, s};
    for (const auto& p : n->g.params().params()) leaves.push_back(p);
    return GradInstance{[=] { return f(n->g.forward(z, s, NormMode::kTrain, false)); }, leaves, n};
  });
  add_case("discriminator_networks", [nets](Rng& r) {
    auto n = nets(r);
    auto v = leaf({2, n->cfg.channels, n->cfg.frames, n->cfg.height, n->cfg.width}, r);
    auto s = leaf({2, n->cfg.s_dim}, r);
    std::vector<V> leaves{v, s};
    for (const auto& p : n->d.params().params()) leaves.push_back(p);
    auto f = weigher(r);
    return GradInstance{[=] {
                          auto fe = n->d.frame_scores(v, s, NormMode::kTrain, false);
                          const auto m = Discriminators<double>::motions_from_features(fe.features, 2, n->cfg.frames);
                          return add_n<double>({f(n->d.video_score(v, s, NormMode::kTrain, false)), f(fe.scores),
                                                f(n->d.motion_scores(m, s, n->cfg.frames))});
                        },
                        leaves, n};
  });
  for (Scheme sc : {Scheme::kCC, Scheme::kCA}) {
    add_case("full_objectives_" + scheme_name(sc), [nets, sc](Rng& r) {
      auto n = nets(r);
      const std::size_t B = 2, L = n->cfg.frames;
      auto z = Var<double>::constant(init_normal<double>({B, n->cfg.z_dim}, 1.0, r));
      auto s = Var<double>::constant(init_uniform<double>({B, n->cfg.s_dim}, -1, 1, r));
      auto vp = Var<double>::constant(init_uniform<double>({B, n->cfg.channels, L, n->cfg.height, n->cfg.width}, -1, 1, r));
      auto vn = Var<double>::constant(init_uniform<double>(vp.shape(), -1, 1, r));
      std::vector<V> leaves;
      for (const auto& p : n->g.params().params()) leaves.push_back(p);
      for (const auto& p : n->d.params().params()) leaves.push_back(p);
      return GradInstance{[=] {
                            auto& d = n->d;
                            const auto syn = n->g.forward(z, s, NormMode::kTrain, false);
                            DiscriminatorTerms<double> dt;
                            dt.l_v = matching_loss(d.video_score(vp, s, NormMode::kTrain, false),
                                                   d.video_score(vn, s, NormMode::kTrain, false),
                                                   d.video_score(syn, s, NormMode::kTrain, false));
                            auto fp = d.frame_scores(vp, s, NormMode::kTrain, false);
                            auto fn = d.frame_scores(vn, s, NormMode::kTrain, false);
                            auto fs = d.frame_scores(syn, s, NormMode::kTrain, false);
                            dt.l_f = matching_loss(fp.scores, fn.scores, fs.scores);
                            const auto mot = [&](const FrameEval<double>& e) {
                              return d.motion_scores(Discriminators<double>::motions_from_features(e.features, B, L), s, L);
                            };
                            dt.l_t = matching_loss(mot(fp), mot(fn), mot(fs));
                            GeneratorTerms<double> gt;
                            gt.log_d0 = mean_log(d.video_score(syn, s, NormMode::kTrain, false));
                            gt.log_d1 = mean_log(fs.scores);
                            gt.coherence = coherence_constraint(fs.features, B, L);
                            gt.log_phi2 = mean_log(mot(fs));
                            return add(discriminator_objective(sc, dt), generator_objective(sc, gt));
                          },
                          leaves, n};
    });
  }
  return c;
}

}  // namespace gradsuite

/// Runs `instances` random instances of every case (optionally only names
/// containing `filter`).
inline std::vector<GradCaseResult> run_gradient_suite(std::uint64_t seed, std::size_t instances = 20,
                                                      double tolerance = 1e-4, const std::string& filter = "") {
  std::vector<GradCaseResult> out;
  const auto all = gradsuite::cases();
  for (std::size_t ci = 0; ci < all.size(); ++ci) {
    const auto& c = all[ci];
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    GradCaseResult res;
    res.name = c.name;
    Rng rng(derive_seed(seed, ci));
    GradCheckOptions opt;
    opt.tolerance = tolerance;
    opt.kink_retry = true;
    for (std::size_t i = 0; i < instances; ++i) {
      auto inst = c.make(rng);
      const auto r = gradcheck(inst.loss, inst.leaves, rng, opt);
      res.max_rel_error = std::max(res.max_rel_error, r.max_rel_error);
      res.coordinates += r.coordinates;
      res.kinks += r.kinks;
      ++res.instances;
    }
    res.pass = res.max_rel_error < tolerance;
    out.push_back(res);
  }
  return out;
}

}  // namespace tgc
