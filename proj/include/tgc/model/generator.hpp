#pragma once

#include <string>
#include <vector>

#include "tgc/core/conv.hpp"
#include "tgc/core/init.hpp"
#include "tgc/core/norm.hpp"
#include "tgc/core/params.hpp"
#include "tgc/model/config.hpp"

namespace tgc {

/// Video shape [C, L, H, W] produced by the generator's layer plan.
inline Shape generator_output_shape(const ModelConfig& cfg) {
  if (cfg.g_seed.size() != 4) throw ConfigError("g_seed must be CxLxHxW");
  if (cfg.g_channels.empty() || cfg.g_channels.size() != cfg.g_strides.size()) {
    throw ConfigError("g_channels and g_strides must list the same number of layers");
  }
  Shape s = cfg.g_seed;
  for (std::size_t k = 0; k < cfg.g_channels.size(); ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      s[1 + d] = transposed_extent(s[1 + d], cfg.g_kernel[d], cfg.g_strides[k][d], cfg.g_pad[d], 0);
    }
    s[0] = cfg.g_channels[k];
  }
  return s;
}

/// Latent fusion p = [z; S W_s], then a linear projection to a seed tensor
/// and a stack of 3D transposed convolutions with tanh output.
template <typename T>
class Generator {
 public:
  Generator() = default;

  Generator(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    const Shape out = generator_output_shape(cfg);
    if (out != cfg.video_shape()) {
      throw ConfigError("generator layer plan yields " + shape_str(out) + " but the video shape is " +
                        shape_str(cfg.video_shape()));
    }
    const double sd = cfg.init_std;
    const auto mom = static_cast<T>(cfg.bn_momentum);
    ps_.add("fuse.w", init_normal<T>({cfg.s_dim, cfg.p_dim}, sd, rng));
    ps_.add("proj.w", init_normal<T>({cfg.z_dim + cfg.p_dim, shape_size(cfg.g_seed)}, sd, rng));
    ps_.add("proj.bn.gamma", init_normal<T>({cfg.g_seed[0]}, 1.0, sd, rng));
    ps_.add("proj.bn.beta", Tensor<T>(Shape{cfg.g_seed[0]}));
    ps_.add_stats("proj.bn", cfg.g_seed[0], mom);
    std::size_t in = cfg.g_seed[0];
    for (std::size_t k = 0; k < cfg.g_channels.size(); ++k) {
      const std::size_t o = cfg.g_channels[k];
      const std::string n = "up" + std::to_string(k);
      ps_.add(n + ".w", init_normal<T>({in, o, cfg.g_kernel[0], cfg.g_kernel[1], cfg.g_kernel[2]}, sd, rng));
      if (k + 1 < cfg.g_channels.size()) {
        ps_.add(n + ".bn.gamma", init_normal<T>({o}, 1.0, sd, rng));
        ps_.add(n + ".bn.beta", Tensor<T>(Shape{o}));
        ps_.add_stats(n + ".bn", o, mom);
      } else {
        ps_.add(n + ".b", Tensor<T>(Shape{o}));
      }
      in = o;
    }
  }

  [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] ParamSet<T>& params() noexcept { return ps_; }
  [[nodiscard]] const ParamSet<T>& params() const noexcept { return ps_; }

  /// z: [B x z_dim], s: [B x s_dim] -> p: [B x (z_dim + p_dim)].
  [[nodiscard]] Var<T> fuse(const Var<T>& z, const Var<T>& s) const {
    if (z.shape().size() != 2 || z.shape()[1] != cfg_.z_dim || s.shape().size() != 2 || s.shape()[1] != cfg_.s_dim ||
        s.shape()[0] != z.shape()[0]) {
      throw DimensionError("fuse: expected z [B x " + std::to_string(cfg_.z_dim) + "] and S [B x " +
                           std::to_string(cfg_.s_dim) + "], got " + shape_str(z.shape()) + " and " +
                           shape_str(s.shape()));
    }
    return concat<T>({z, linear(s, ps_.get("fuse.w"))}, 1);
  }

  /// p: [B x (z_dim + p_dim)] -> videos [B, C, L, H, W] in [-1, 1].
  [[nodiscard]] Var<T> generate(const Var<T>& p, NormMode mode, bool update_stats) {
    if (p.shape().size() != 2 || p.shape()[1] != cfg_.z_dim + cfg_.p_dim) {
      throw DimensionError("generate: latent must be [B x " + std::to_string(cfg_.z_dim + cfg_.p_dim) + "], got " +
                           shape_str(p.shape()));
    }
    const std::size_t B = p.shape()[0];
    Shape seed{B};
    seed.insert(seed.end(), cfg_.g_seed.begin(), cfg_.g_seed.end());
    auto h = reshape(linear(p, ps_.get("proj.w")), seed);
    h = relu(norm("proj.bn", h, mode, update_stats));
    const std::size_t layers = cfg_.g_channels.size();
    for (std::size_t k = 0; k < layers; ++k) {
      const std::string n = "up" + std::to_string(k);
      h = conv3d_transposed(h, ps_.get(n + ".w"), cfg_.g_strides[k], cfg_.g_pad);
      if (k + 1 < layers) {
        h = relu(norm(n + ".bn", h, mode, update_stats));
      } else {
        h = tanh(add_channel_bias(h, ps_.get(n + ".b")));
      }
    }
    return h;
  }

  [[nodiscard]] Var<T> forward(const Var<T>& z, const Var<T>& s, NormMode mode, bool update_stats) {
    return generate(fuse(z, s), mode, update_stats);
  }

 private:
  Var<T> norm(const std::string& n, const Var<T>& x, NormMode mode, bool update) {
    return batch_norm(x, ps_.get(n + ".gamma"), ps_.get(n + ".beta"), static_cast<T>(cfg_.bn_eps), mode,
                      mode == NormMode::kInference || update ? &ps_.stats(n) : nullptr);
  }

  ModelConfig cfg_;
  ParamSet<T> ps_;
};

}  // namespace tgc
