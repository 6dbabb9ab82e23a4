#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "tgc/data/bouncing.hpp"
#include "tgc/data/video_io.hpp"
#include "tgc/text/vocabulary.hpp"

namespace tgc {

struct DatasetPreset {
  std::string name;
  std::size_t height = 64, width = 64, frames = 16, speed = 2;
  std::size_t sprite_size = 28;
  std::size_t num_digits = 1;
  std::vector<std::size_t> digits{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<Motion> motions{Motion::kUpDown, Motion::kLeftRight};
  std::size_t train_count = 12000;
  std::size_t heldout_count = 256;
};

inline DatasetPreset dataset_preset(const std::string& name) {
  DatasetPreset p;
  p.name = name;
  if (name == "sbmg-desk") {
    p.height = p.width = 16;
    p.frames = 8;
    p.sprite_size = 10;
    p.digits = {0, 1, 3};
    p.train_count = 512;
    p.heldout_count = 64;
  } else if (name == "sbmg") {
    // defaults
  } else if (name == "tbmg") {
    p.num_digits = 2;
  } else if (name == "tbmg-desk") {
    p.height = p.width = 24;
    p.frames = 8;
    p.sprite_size = 10;
    p.num_digits = 2;
    p.digits = {0, 1, 3};
    p.train_count = 512;
    p.heldout_count = 64;
  } else {
    throw ConfigError("unknown dataset preset '" + name + "' (sbmg-desk, sbmg, tbmg, tbmg-desk)");
  }
  return p;
}

/// Sample i of the training split uses seed (dataset_seed xor i); held-out
/// samples continue the index after the training split.
inline std::vector<CaptionedVideo> generate_split(const DatasetPreset& p, std::uint64_t seed, bool heldout,
                                                  const SpriteSet& sprites) {
  const std::size_t count = heldout ? p.heldout_count : p.train_count;
  const std::size_t offset = heldout ? p.train_count : 0;
  std::vector<CaptionedVideo> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(seed ^ static_cast<std::uint64_t>(offset + i));
    auto spec = random_spec(rng, p.height, p.width, p.frames, p.speed, p.sprite_size, p.num_digits, p.digits,
                            p.motions, sprites);
    out.push_back(generate_bouncing(spec, sprites));
  }
  return out;
}

inline SpriteSet sprites_for(const DatasetPreset& p, const SpriteSet* source = nullptr) {
  if (source) return resize_sprites(*source, p.sprite_size);
  return builtin_sprites(p.sprite_size);
}

struct VideoSample {
  Tensor<float> video;  // [C, L, H, W]
  std::string caption;
};

struct VideoDataset {
  std::vector<VideoSample> samples;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  [[nodiscard]] std::vector<std::string> distinct_captions() const {
    std::set<std::string> s;
    for (const auto& v : samples) s.insert(normalize_caption(v.caption));
    return {s.begin(), s.end()};
  }
  [[nodiscard]] Shape video_shape() const {
    if (samples.empty()) throw InputError("dataset is empty");
    return samples.front().video.shape();
  }
};

inline VideoDataset to_dataset(const std::vector<CaptionedVideo>& vids) {
  VideoDataset d;
  for (const auto& v : vids) d.samples.push_back({v.video, v.caption});
  return d;
}

/// Writes <dir>/<subdir>/NNNNN<ext> and a manifest of "<file>\t<caption>" lines.
inline void write_split(const std::filesystem::path& dir, const std::string& subdir, const std::string& manifest,
                        const std::vector<CaptionedVideo>& vids, VideoFormat format) {
  std::filesystem::create_directories(dir / subdir);
  std::ofstream m(dir / manifest);
  if (!m) throw IoError("cannot write " + (dir / manifest).string());
  for (std::size_t i = 0; i < vids.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu", i);
    const std::string rel = subdir + "/" + name + video_extension(format);
    export_video(vids[i].video, dir / rel, format);
    m << rel << '\t' << vids[i].caption << '\n';
  }
  if (!m) throw IoError("failed writing " + (dir / manifest).string());
}

inline Tensor<float> resize_video(const Tensor<float>& v, std::size_t h, std::size_t w) {
  const std::size_t C = v.dim(0), L = v.dim(1), H = v.dim(2), W = v.dim(3);
  if (H == h && W == w) return v;
  Tensor<float> out(Shape{C, L, h, w});
  for (std::size_t f = 0; f < C * L; ++f) {
    Tensor<float> frame(Shape{H, W}, std::vector<float>(v.ptr() + f * H * W, v.ptr() + (f + 1) * H * W));
    const auto r = resize_area(frame, h, w);
    std::copy_n(r.ptr(), h * w, out.ptr() + f * h * w);
  }
  return out;
}

/// Reads a manifest written by write_split. Videos are resized to
/// (height, width) when both are nonzero.
inline VideoDataset load_split(const std::filesystem::path& dir, const std::string& manifest = "manifest.tsv",
                               std::size_t height = 0, std::size_t width = 0) {
  std::ifstream m(dir / manifest);
  if (!m) throw IoError("cannot read dataset manifest " + (dir / manifest).string());
  VideoDataset d;
  std::size_t line_no = 0;
  for (std::string line; std::getline(m, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError((dir / manifest).string() + ":" + std::to_string(line_no) + ": expected <file>\\t<caption>");
    }
    auto v = import_video(dir / line.substr(0, tab));
    if (height && width) v = resize_video(v, height, width);
    if (!d.samples.empty() && v.shape() != d.samples.front().video.shape()) {
      throw DimensionError("video " + line.substr(0, tab) + " has shape " + shape_str(v.shape()) + ", expected " +
                           shape_str(d.samples.front().video.shape()));
    }
    d.samples.push_back({std::move(v), line.substr(tab + 1)});
  }
  if (d.samples.empty()) throw InputError("dataset manifest " + (dir / manifest).string() + " lists no videos");
  return d;
}

/// Every distinct template caption for single digits, plus `pairs`
/// deterministic two-digit captions.
inline std::vector<std::string> templated_corpus(const std::vector<std::size_t>& digits, std::size_t pairs,
                                                 std::uint64_t seed = 3) {
  std::vector<std::string> out;
  const Motion ms[] = {Motion::kUpDown, Motion::kLeftRight};
  for (auto d : digits) {
    for (auto m : ms) {
      BouncingSpec s;
      s.digits.push_back({d, m});
      out.push_back(caption_for(s));
    }
  }
  Rng rng(seed);
  std::set<std::string> seen(out.begin(), out.end());
  for (std::size_t guard = 0; pairs > 0 && guard < 100000; ++guard) {
    BouncingSpec s;
    for (int k = 0; k < 2; ++k) s.digits.push_back({digits[rng.uniform_index(digits.size())], ms[rng.uniform_index(2)]});
    auto c = caption_for(s);
    if (seen.insert(c).second) {
      out.push_back(c);
      --pairs;
    }
  }
  return out;
}

}  // namespace tgc
