#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tgc/core/conv.hpp"
#include "tgc/core/error.hpp"

namespace tgc {

enum class Scheme { kC1, kC2, kCC, kCA };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kC1: return "tgans-c-1";
    case Scheme::kC2: return "tgans-c-2";
    case Scheme::kCC: return "tgans-c-c";
    case Scheme::kCA: return "tgans-c-a";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  for (auto v : {Scheme::kC1, Scheme::kC2, Scheme::kCC, Scheme::kCA}) {
    if (scheme_name(v) == s) return v;
  }
  throw ConfigError("unknown scheme '" + s + "' (tgans-c-1, tgans-c-2, tgans-c-c, tgans-c-a)");
}

inline bool uses_frames(Scheme s) { return s != Scheme::kC1; }
inline bool uses_motion(Scheme s) { return s == Scheme::kCA; }

/// Network shapes shared by the generator and the discriminators.
struct ModelConfig {
  std::size_t channels = 1, frames = 8, height = 16, width = 16;
  std::size_t z_dim = 100, s_dim = 256, p_dim = 256;
  std::vector<std::size_t> g_seed{32, 1, 2, 2};  // C, L, H, W
  std::vector<std::size_t> g_channels{16, 8, 1};
  Triple g_kernel{4, 4, 4}, g_pad{1, 1, 1};
  std::vector<Triple> g_strides{{2, 2, 2}, {2, 2, 2}, {2, 2, 2}};
  std::vector<std::size_t> d_channels{8, 16, 32};
  std::size_t d_kernel = 4, d_stride = 2, d_pad = 1;
  std::size_t cond_dim = 32;
  std::size_t head_channels = 32;
  double init_std = 0.02, leak = 0.2, bn_momentum = 0.99, bn_eps = 1e-5;

  [[nodiscard]] std::vector<std::size_t> video_shape() const { return {channels, frames, height, width}; }
};

struct TrainConfig {
  ModelConfig model;
  Scheme scheme = Scheme::kCA;
  std::size_t batch_size = 16;
  double learning_rate = 2e-4, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::size_t iterations = 2000, checkpoint_interval = 500;
  std::uint64_t seed = 1;
  std::size_t probe_count = 8;
  std::string dataset, heldout, encoder, sample_format = "gif";
};

namespace config_detail {

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  const auto e = s.find_last_not_of(" \t\r");
  s.erase(e == std::string::npos ? 0 : e + 1);
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(trim(part));
  return out;
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

inline std::vector<std::size_t> to_dims(const std::string& key, const std::string& v, char sep) {
  std::vector<std::size_t> out;
  for (const auto& p : split(v, sep)) out.push_back(to_size(key, p));
  return out;
}

inline Triple to_triple(const std::string& key, const std::string& v) {
  auto d = to_dims(key, v, 'x');
  if (d.size() == 1) return {d[0], d[0], d[0]};
  if (d.size() != 3) throw ConfigError(key + ": expected AxBxC, got '" + v + "'");
  return {d[0], d[1], d[2]};
}

inline std::string join(const std::vector<std::size_t>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

inline std::string num(double d) {
  std::ostringstream o;
  o.precision(17);
  o << d;
  return o.str();
}

struct Field {
  const char* key;
  bool hashed;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define TGC_SIZE(name, member, hashed)                                                                \
  Field { name, hashed, [](TrainConfig& c, const std::string& v) { c.member = to_size(name, v); },   \
          [](const TrainConfig& c) { return std::to_string(c.member); } }
#define TGC_DOUBLE(name, member)                                                                      \
  Field { name, true, [](TrainConfig& c, const std::string& v) { c.member = to_double(name, v); },   \
          [](const TrainConfig& c) { return num(c.member); } }
#define TGC_STRING(name, member)                                                            \
  Field { name, false, [](TrainConfig& c, const std::string& v) { c.member = v; },          \
          [](const TrainConfig& c) { return c.member; } }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      TGC_SIZE("channels", model.channels, true),
      TGC_SIZE("frames", model.frames, true),
      TGC_SIZE("height", model.height, true),
      TGC_SIZE("width", model.width, true),
      TGC_SIZE("z_dim", model.z_dim, true),
      TGC_SIZE("s_dim", model.s_dim, true),
      TGC_SIZE("p_dim", model.p_dim, true),
      Field{"g_seed", true, [](TrainConfig& c, const std::string& v) { c.model.g_seed = to_dims("g_seed", v, 'x'); },
            [](const TrainConfig& c) { return join(c.model.g_seed, 'x'); }},
      Field{"g_channels", true,
            [](TrainConfig& c, const std::string& v) { c.model.g_channels = to_dims("g_channels", v, ','); },
            [](const TrainConfig& c) { return join(c.model.g_channels, ','); }},
      Field{"g_kernel", true, [](TrainConfig& c, const std::string& v) { c.model.g_kernel = to_triple("g_kernel", v); },
            [](const TrainConfig& c) { return triple_str(c.model.g_kernel); }},
      Field{"g_pad", true, [](TrainConfig& c, const std::string& v) { c.model.g_pad = to_triple("g_pad", v); },
            [](const TrainConfig& c) { return triple_str(c.model.g_pad); }},
      Field{"g_strides", true,
            [](TrainConfig& c, const std::string& v) {
              c.model.g_strides.clear();
              for (const auto& p : split(v, ',')) c.model.g_strides.push_back(to_triple("g_strides", p));
            },
            [](const TrainConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.model.g_strides.size(); ++i) {
                s += (i ? "," : "") + triple_str(c.model.g_strides[i]);
              }
              return s;
            }},
      Field{"d_channels", true,
            [](TrainConfig& c, const std::string& v) { c.model.d_channels = to_dims("d_channels", v, ','); },
            [](const TrainConfig& c) { return join(c.model.d_channels, ','); }},
      TGC_SIZE("d_kernel", model.d_kernel, true),
      TGC_SIZE("d_stride", model.d_stride, true),
      TGC_SIZE("d_pad", model.d_pad, true),
      TGC_SIZE("cond_dim", model.cond_dim, true),
      TGC_SIZE("head_channels", model.head_channels, true),
      TGC_DOUBLE("init_std", model.init_std),
      TGC_DOUBLE("leak", model.leak),
      TGC_DOUBLE("bn_momentum", model.bn_momentum),
      TGC_DOUBLE("bn_eps", model.bn_eps),
      Field{"scheme", true, [](TrainConfig& c, const std::string& v) { c.scheme = parse_scheme(v); },
            [](const TrainConfig& c) { return scheme_name(c.scheme); }},
      TGC_SIZE("batch_size", batch_size, true),
      TGC_DOUBLE("learning_rate", learning_rate),
      TGC_DOUBLE("beta1", beta1),
      TGC_DOUBLE("beta2", beta2),
      TGC_DOUBLE("adam_eps", adam_eps),
      TGC_SIZE("iterations", iterations, false),
      TGC_SIZE("checkpoint_interval", checkpoint_interval, false),
      Field{"seed", true, [](TrainConfig& c, const std::string& v) { c.seed = to_size("seed", v); },
            [](const TrainConfig& c) { return std::to_string(c.seed); }},
      TGC_SIZE("probe_count", probe_count, true),
      TGC_STRING("dataset", dataset),
      TGC_STRING("heldout", heldout),
      TGC_STRING("encoder", encoder),
      TGC_STRING("sample_format", sample_format),
  };
  return f;
}

#undef TGC_SIZE
#undef TGC_DOUBLE
#undef TGC_STRING

}  // namespace config_detail

/// Sets one key; unknown keys are a ConfigError.
inline void apply_setting(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_detail::fields()) {
    if (key == f.key) {
      f.set(cfg, config_detail::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Applies "key = value" lines; '#' starts a comment.
inline void apply_config_text(TrainConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(cfg, config_detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

inline std::string config_text(const TrainConfig& cfg) {
  std::string s;
  for (const auto& f : config_detail::fields()) s += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return s;
}

/// FNV-1a over the settings that shape the trajectory; run length and paths
/// are excluded so a run can be resumed with a larger iteration count.
inline std::uint64_t config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : config_detail::fields()) {
    if (!f.hashed) continue;
    for (char ch : std::string(f.key) + "=" + f.get(cfg) + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline const char* kDeskPreset = R"(# 1x8x16x16 bouncing digits, CPU sized
channels = 1
frames = 8
height = 16
width = 16
z_dim = 100
s_dim = 256
p_dim = 256
g_seed = 32x1x2x2
g_channels = 16,8,1
g_kernel = 4x4x4
g_pad = 1x1x1
g_strides = 2x2x2,2x2x2,2x2x2
d_channels = 8,16,32
d_kernel = 4
d_stride = 2
d_pad = 1
cond_dim = 32
head_channels = 32
init_std = 0.02
leak = 0.2
bn_momentum = 0.99
bn_eps = 1e-05
scheme = tgans-c-a
batch_size = 16
learning_rate = 0.0002
beta1 = 0.9
beta2 = 0.999
adam_eps = 1e-08
iterations = 2000
checkpoint_interval = 500
seed = 1
probe_count = 8
sample_format = gif
)";

inline const char* kPaperPreset = R"(# 3x16x48x48 video, full widths
channels = 3
frames = 16
height = 48
width = 48
z_dim = 100
s_dim = 256
p_dim = 256
g_seed = 512x1x3x3
g_channels = 256,128,64,3
g_kernel = 4x4x4
g_pad = 1x1x1
g_strides = 2x2x2,2x2x2,2x2x2,2x2x2
d_channels = 64,128,256,512
d_kernel = 4
d_stride = 2
d_pad = 1
cond_dim = 128
head_channels = 512
init_std = 0.02
leak = 0.2
bn_momentum = 0.99
bn_eps = 1e-05
scheme = tgans-c-a
batch_size = 64
learning_rate = 0.0002
beta1 = 0.9
beta2 = 0.999
adam_eps = 1e-08
iterations = 20000
checkpoint_interval = 1000
seed = 1
probe_count = 8
sample_format = gif
)";

/// "desk" or "paper".
inline TrainConfig preset_config(const std::string& name) {
  TrainConfig c;
  if (name == "desk") {
    apply_config_text(c, kDeskPreset, "desk preset");
  } else if (name == "paper") {
    apply_config_text(c, kPaperPreset, "paper preset");
  } else {
    throw ConfigError("unknown config preset '" + name + "' (desk, paper)");
  }
  return c;
}

}  // namespace tgc
