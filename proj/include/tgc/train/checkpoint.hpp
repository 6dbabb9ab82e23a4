#pragma once

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tgc/core/adam.hpp"
#include "tgc/core/rng.hpp"
#include "tgc/model/discriminators.hpp"
#include "tgc/model/generator.hpp"

namespace tgc {

inline std::string hex64(std::uint64_t v) {
  char b[24];
  std::snprintf(b, sizeof(b), "%016" PRIx64, v);
  return b;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw FormatError("bad hexadecimal value '" + s + "'");
  return v;
}

inline std::string rng_state_str(const Rng::State& st) {
  std::string s;
  for (auto w : st.s) s += hex64(w) + " ";
  s += std::string(st.has_spare ? "1 " : "0 ") + hex64(std::bit_cast<std::uint64_t>(st.spare));
  return s;
}

inline Rng::State parse_rng_state(const std::string& text) {
  std::istringstream in(text);
  Rng::State st;
  std::string w;
  for (auto& word : st.s) {
    if (!(in >> w)) throw FormatError("truncated rng state");
    word = parse_hex64(w);
  }
  std::string spare;
  if (!(in >> w >> spare) || (w != "0" && w != "1")) throw FormatError("truncated rng state");
  st.has_spare = w == "1";
  st.spare = std::bit_cast<double>(parse_hex64(spare));
  return st;
}

/// Reads "key = value" lines into a map.
inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

/// Everything needed to continue a run or to use its models.
struct Checkpoint {
  TrainConfig config;
  std::size_t iteration = 0;
  Rng::State rng;
  std::uint64_t encoder_fingerprint = 0;
  Generator<float> generator;
  Discriminators<float> discriminators;
  AdamState<float> g_opt, d_opt;
};

/// <dir>/model.tgcb holds parameters, batch-norm statistics and Adam moments;
/// <dir>/checkpoint.manifest holds the iteration, RNG state, config hash and
/// the full configuration as "config.<key> = <value>" lines.
inline void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& c) {
  std::filesystem::create_directories(dir);
  TensorBundle<float> bundle;
  c.generator.params().export_to(bundle, "g");
  c.discriminators.params().export_to(bundle, "d");
  export_adam(bundle, "g.adam", c.g_opt);
  export_adam(bundle, "d.adam", c.d_opt);
  save_bundle(dir / "model.tgcb", bundle);
  std::ofstream m(dir / "checkpoint.manifest");
  m << "format = tgc-checkpoint-1\n"
    << "iteration = " << c.iteration << "\n"
    << "config_hash = " << hex64(config_hash(c.config)) << "\n"
    << "rng = " << rng_state_str(c.rng) << "\n"
    << "encoder_fingerprint = " << hex64(c.encoder_fingerprint) << "\n"
    << "video_shape = " << shape_str(c.config.model.video_shape()) << "\n"
    << "m_v = " << shape_str(c.discriminators.video_feature_shape()) << "\n"
    << "m_f = " << shape_str(c.discriminators.frame_feature_shape()) << "\n";
  std::istringstream cfg(config_text(c.config));
  for (std::string line; std::getline(cfg, line);) m << "config." << line << "\n";
  if (!m) throw IoError("cannot write " + (dir / "checkpoint.manifest").string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "checkpoint.manifest")) {
    throw IoError("no checkpoint at " + dir.string());
  }
  const auto kv = read_manifest(dir / "checkpoint.manifest");
  const auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError(dir.string() + ": checkpoint manifest lacks '" + k + "'");
    return it->second;
  };
  if (get("format") != "tgc-checkpoint-1") throw FormatError(dir.string() + ": unknown checkpoint format");
  Checkpoint c;
  for (const auto& [k, v] : kv) {
    if (k.rfind("config.", 0) == 0) apply_setting(c.config, k.substr(7), v);
  }
  if (parse_hex64(get("config_hash")) != config_hash(c.config)) {
    throw FormatError(dir.string() + ": config hash does not match the stored configuration");
  }
  c.iteration = std::stoul(get("iteration"));
  c.rng = parse_rng_state(get("rng"));
  c.encoder_fingerprint = parse_hex64(get("encoder_fingerprint"));
  Rng init(0);
  c.generator = Generator<float>(c.config.model, init);
  c.discriminators = Discriminators<float>(c.config.model, init);
  const auto bundle = load_bundle<float>(dir / "model.tgcb");
  c.generator.params().import_from(bundle, "g");
  c.discriminators.params().import_from(bundle, "d");
  AdamConfig ac{c.config.learning_rate, c.config.beta1, c.config.beta2, c.config.adam_eps};
  c.g_opt = AdamState<float>(ac);
  c.d_opt = AdamState<float>(ac);
  import_adam(bundle, "g.adam", c.g_opt, c.generator.params().size());
  import_adam(bundle, "d.adam", c.d_opt, c.discriminators.params().size());
  return c;
}

}  // namespace tgc
