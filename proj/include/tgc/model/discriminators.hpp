#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tgc/core/conv.hpp"
#include "tgc/core/init.hpp"
#include "tgc/core/norm.hpp"
#include "tgc/core/params.hpp"
#include "tgc/model/config.hpp"

namespace tgc {

namespace detail {
inline std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
  if (in + 2 * p < k) throw ConfigError("discriminator input too small for its conv stack");
  return (in + 2 * p - k) / s + 1;
}
}  // namespace detail

/// m_v: [C, l, h, w] after the 3D conv stack.
inline Shape video_feature_shape(const ModelConfig& c) {
  Shape s{c.channels, c.frames, c.height, c.width};
  for (auto ch : c.d_channels) {
    for (std::size_t d = 1; d < 4; ++d) s[d] = detail::conv_extent(s[d], c.d_kernel, c.d_stride, c.d_pad);
    s[0] = ch;
  }
  return s;
}

/// m_f: [C, h, w] after the 2D conv stack.
inline Shape frame_feature_shape(const ModelConfig& c) {
  Shape s{c.channels, c.height, c.width};
  for (auto ch : c.d_channels) {
    for (std::size_t d = 1; d < 3; ++d) s[d] = detail::conv_extent(s[d], c.d_kernel, c.d_stride, c.d_pad);
    s[0] = ch;
  }
  return s;
}

/// The frame-level scores of a video batch, with the frame features they were
/// computed from (reused for motion tensors and the coherence term).
template <typename T>
struct FrameEval {
  Var<T> features;  // [B*L, C, h, w]
  Var<T> scores;    // [B x L]
};

/// Video discriminator D0, frame discriminator D1 and motion classifier
/// Phi2 (sharing D1's frame features) in one parameter set.
template <typename T>
class Discriminators {
 public:
  Discriminators() = default;

  Discriminators(const ModelConfig& cfg, Rng& rng) : cfg_(cfg), mv_(tgc::video_feature_shape(cfg)), mf_(tgc::frame_feature_shape(cfg)) {
    if (cfg.d_channels.empty()) throw ConfigError("d_channels must list at least one layer");
    for (std::size_t d = 1; d < mv_.size(); ++d) {
      if (mv_[d] == 0) throw ConfigError("video feature tensor has an empty axis: " + shape_str(mv_));
    }
    const double sd = cfg.init_std;
    const auto mom = static_cast<T>(cfg.bn_momentum);
    const std::size_t k = cfg.d_kernel;
    std::size_t in = cfg.channels;
    for (std::size_t i = 0; i < cfg.d_channels.size(); ++i) {
      const std::size_t o = cfg.d_channels[i];
      ps_.add("v" + std::to_string(i) + ".w", init_normal<T>({o, in, k, k, k}, sd, rng));
      ps_.add("f" + std::to_string(i) + ".w", init_normal<T>({o, in, k, k}, sd, rng));
      if (i > 0) {
        for (const char* p : {"v", "f"}) {
          const std::string n = p + std::to_string(i) + ".bn";
          ps_.add(n + ".gamma", init_normal<T>({o}, 1.0, sd, rng));
          ps_.add(n + ".beta", Tensor<T>(Shape{o}));
          ps_.add_stats(n, o, mom);
        }
      }
      in = o;
    }
    add_head("v", mv_, rng);
    add_head("f", mf_, rng);
    add_head("m", mf_, rng);
  }

  [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] ParamSet<T>& params() noexcept { return ps_; }
  [[nodiscard]] const ParamSet<T>& params() const noexcept { return ps_; }
  [[nodiscard]] const Shape& video_feature_shape() const noexcept { return mv_; }
  [[nodiscard]] const Shape& frame_feature_shape() const noexcept { return mf_; }

  /// v: [B, C, L, H, W] -> m_v: [B, C', l, h, w].
  [[nodiscard]] Var<T> video_features(const Var<T>& v, NormMode mode, bool update_stats) {
    Shape want{0, cfg_.channels, cfg_.frames, cfg_.height, cfg_.width};
    if (v.shape().size() != 5 || !std::equal(want.begin() + 1, want.end(), v.shape().begin() + 1)) {
      throw DimensionError("D0 expects videos [B, " + shape_str(cfg_.video_shape()) + "], got " + shape_str(v.shape()));
    }
    auto h = v;
    const std::size_t s = cfg_.d_stride, p = cfg_.d_pad;
    for (std::size_t i = 0; i < cfg_.d_channels.size(); ++i) {
      const std::string n = "v" + std::to_string(i);
      h = conv3d(h, ps_.get(n + ".w"), Triple{s, s, s}, Triple{p, p, p});
      if (i > 0) h = norm(n + ".bn", h, mode, update_stats);
      h = leaky_relu(h, static_cast<T>(cfg_.leak));
    }
    return h;
  }

  /// frames: [N, C, H, W] -> m_f: [N, C', h, w].
  [[nodiscard]] Var<T> frame_features(const Var<T>& f, NormMode mode, bool update_stats) {
    const Shape& fs = f.shape();
    if (fs.size() != 4 || fs[1] != cfg_.channels || fs[2] != cfg_.height || fs[3] != cfg_.width) {
      throw DimensionError("D1 expects frames [N, " + std::to_string(cfg_.channels) + ", " +
                           std::to_string(cfg_.height) + ", " + std::to_string(cfg_.width) + "], got " + shape_str(fs));
    }
    auto h = f;
    const std::size_t s = cfg_.d_stride, p = cfg_.d_pad;
    for (std::size_t i = 0; i < cfg_.d_channels.size(); ++i) {
      const std::string n = "f" + std::to_string(i);
      h = conv2d(h, ps_.get(n + ".w"), Pair{s, s}, Pair{p, p});
      if (i > 0) h = norm(n + ".bn", h, mode, update_stats);
      h = leaky_relu(h, static_cast<T>(cfg_.leak));
    }
    return h;
  }

  /// [B, C, L, H, W] -> [B*L, C, H, W], frame-major within each video.
  [[nodiscard]] static Var<T> frames_of(const Var<T>& v) {
    const Shape& s = v.shape();
    return reshape(transpose(v, 1, 2), {s[0] * s[2], s[1], s[3], s[4]});
  }

  /// D0 probabilities [B].
  [[nodiscard]] Var<T> video_score(const Var<T>& v, const Var<T>& s, NormMode mode, bool update_stats) {
    return head("v", video_features(v, mode, update_stats), s);
  }

  /// D1 probabilities of every frame [B x L].
  [[nodiscard]] FrameEval<T> frame_scores(const Var<T>& v, const Var<T>& s, NormMode mode, bool update_stats) {
    const std::size_t B = v.shape()[0], L = v.shape()[2];
    check_condition(s, B);
    auto feats = frame_features(frames_of(v), mode, update_stats);
    return {feats, reshape(head("f", feats, repeat_rows(s, L)), {B, L})};
  }

  /// Single-frame D1 probabilities [N] for frames [N, C, H, W].
  [[nodiscard]] Var<T> frame_score(const Var<T>& f, const Var<T>& s, NormMode mode, bool update_stats) {
    return head("f", frame_features(f, mode, update_stats), s);
  }

  /// Motion tensors m_{f^i} - m_{f^{i-1}} from frame features [B*L, ...]:
  /// [B*(L-1), C', h, w].
  [[nodiscard]] static Var<T> motions_from_features(const Var<T>& feats, std::size_t B, std::size_t L) {
    if (L < 2) throw PreconditionError("motion tensors need at least 2 frames");
    Shape grouped{B, L};
    grouped.insert(grouped.end(), feats.shape().begin() + 1, feats.shape().end());
    const auto g = reshape(feats, grouped);
    Shape out{B * (L - 1)};
    out.insert(out.end(), feats.shape().begin() + 1, feats.shape().end());
    return reshape(sub(slice(g, 1, 1, L), slice(g, 1, 0, L - 1)), out);
  }

  /// m_{f_i} - m_{f_prev} for frames [N, C, H, W].
  [[nodiscard]] Var<T> motion_features(const Var<T>& f_i, const Var<T>& f_prev, NormMode mode = NormMode::kInference) {
    f_i.value().require_same_shape(f_prev.value(), "motion_features");
    return sub(frame_features(f_i, mode, false), frame_features(f_prev, mode, false));
  }

  /// Phi2 probabilities [B x (L-1)] for motion tensors of B videos.
  [[nodiscard]] Var<T> motion_scores(const Var<T>& motions, const Var<T>& s, std::size_t L) {
    const std::size_t B = s.shape()[0];
    if (L < 2 || motions.shape()[0] != B * (L - 1)) throw DimensionError("motion_scores: motion count mismatch");
    return reshape(head("m", motions, repeat_rows(s, L - 1)), {B, L - 1});
  }

  /// Phi2 probabilities [N] for motion tensors [N, C', h, w].
  [[nodiscard]] Var<T> motion_score(const Var<T>& m, const Var<T>& s) { return head("m", m, s); }

 private:
  void add_head(const std::string& p, const Shape& feat, Rng& rng) {
    const double sd = cfg_.init_std;
    const std::size_t c = feat[0], hc = cfg_.head_channels;
    Shape one{hc, c + cfg_.cond_dim};
    Shape full{1, hc};
    for (std::size_t d = 1; d < feat.size(); ++d) {
      one.push_back(1);
      full.push_back(feat[d]);
    }
    ps_.add(p + ".phi.w", init_normal<T>({cfg_.s_dim, cfg_.cond_dim}, sd, rng));
    ps_.add(p + ".phi.b", Tensor<T>(Shape{cfg_.cond_dim}));
    ps_.add(p + ".h1.w", init_normal<T>(one, sd, rng));
    ps_.add(p + ".h1.b", Tensor<T>(Shape{hc}));
    ps_.add(p + ".out.w", init_normal<T>(full, sd, rng));
    ps_.add(p + ".out.b", Tensor<T>(Shape{1}));
  }

  void check_condition(const Var<T>& s, std::size_t n) const {
    if (s.shape() != Shape{n, cfg_.s_dim}) {
      throw DimensionError("condition must be [" + std::to_string(n) + " x " + std::to_string(cfg_.s_dim) + "], got " +
                           shape_str(s.shape()));
    }
  }

  /// concat(m, replicated phi(S)) -> 1x1 conv -> leaky ReLU -> full-extent
  /// conv -> sigmoid. Returns [N].
  Var<T> head(const std::string& p, const Var<T>& m, const Var<T>& s) {
    const std::size_t N = m.shape()[0];
    check_condition(s, N);
    const Shape spatial(m.shape().begin() + 2, m.shape().end());
    const auto phi = relu(linear(s, ps_.get(p + ".phi.w"), ps_.get(p + ".phi.b")));
    auto h = concat<T>({m, replicate_spatial(phi, spatial)}, 1);
    const bool three = spatial.size() == 3;
    const auto conv = [three](const Var<T>& x, const Var<T>& k) {
      return three ? conv3d(x, k) : conv2d(x, k);
    };
    h = leaky_relu(add_channel_bias(conv(h, ps_.get(p + ".h1.w")), ps_.get(p + ".h1.b")), static_cast<T>(cfg_.leak));
    h = add_channel_bias(conv(h, ps_.get(p + ".out.w")), ps_.get(p + ".out.b"));
    return sigmoid(reshape(h, {N}));
  }

  Var<T> norm(const std::string& n, const Var<T>& x, NormMode mode, bool update) {
    return batch_norm(x, ps_.get(n + ".gamma"), ps_.get(n + ".beta"), static_cast<T>(cfg_.bn_eps), mode,
                      mode == NormMode::kInference || update ? &ps_.stats(n) : nullptr);
  }

  ModelConfig cfg_;
  Shape mv_, mf_;
  ParamSet<T> ps_;
};

}  // namespace tgc
