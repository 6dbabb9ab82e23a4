#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tgc/core/rng.hpp"
#include "tgc/data/sprites.hpp"

namespace tgc {

enum class Motion { kUpDown, kLeftRight };

inline std::string motion_phrase(Motion m) { return m == Motion::kUpDown ? "up and down" : "left and right"; }

struct DigitTrack {
  std::size_t digit = 0;
  Motion motion = Motion::kUpDown;
  std::size_t sprite_index = 0;
  std::size_t row = 0;  // top-left start position
  std::size_t col = 0;
  int direction = 1;  // +1 down/right, -1 up/left
};

struct BouncingSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t frames = 16;
  std::size_t speed = 2;
  std::vector<DigitTrack> digits;
};

struct CaptionedVideo {
  Tensor<float> video;  // [1, L, H, W], values in [-1, 1]
  std::string caption;
  BouncingSpec spec;
  /// Top-left corner of each digit per frame: positions[d][t] = {row, col}.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> positions;
};

inline std::string caption_for(const BouncingSpec& spec) {
  if (spec.digits.size() == 1) {
    return "digit " + std::to_string(spec.digits[0].digit) + " is moving " + motion_phrase(spec.digits[0].motion);
  }
  std::string out;
  for (std::size_t i = 0; i < spec.digits.size(); ++i) {
    if (i) out += " and ";
    out += "digit " + std::to_string(spec.digits[i].digit) + " is " + motion_phrase(spec.digits[i].motion);
  }
  return out;
}

/// Positions along one axis: constant speed, reflected at 0 and `limit`.
inline std::vector<std::size_t> reflect_trajectory(std::size_t start, int direction, std::size_t speed,
                                                   std::size_t limit, std::size_t frames) {
  std::vector<std::size_t> out;
  long p = static_cast<long>(start);
  long v = direction * static_cast<long>(speed);
  const long m = static_cast<long>(limit);
  for (std::size_t t = 0; t < frames; ++t) {
    out.push_back(static_cast<std::size_t>(p));
    if (m == 0) continue;
    p += v;
    while (p < 0 || p > m) {
      if (p < 0) {
        p = -p;
        v = -v;
      }
      if (p > m) {
        p = 2 * m - p;
        v = -v;
      }
    }
  }
  return out;
}

inline CaptionedVideo generate_bouncing(const BouncingSpec& spec, const SpriteSet& sprites) {
  if (spec.digits.empty()) throw ConfigError("bouncing spec has no digits");
  if (spec.frames == 0 || spec.height == 0 || spec.width == 0) throw ConfigError("bouncing spec has empty extents");
  CaptionedVideo out;
  out.spec = spec;
  out.caption = caption_for(spec);
  Tensor<float> canvas(Shape{1, spec.frames, spec.height, spec.width});
  for (const auto& d : spec.digits) {
    if (!sprites.has(d.digit)) throw ConfigError("no sprite for digit " + std::to_string(d.digit));
    const auto& list = sprites.by_class[d.digit];
    const Tensor<float>& sp = list[d.sprite_index % list.size()];
    const std::size_t sh = sp.dim(0), sw = sp.dim(1);
    if (sh > spec.height || sw > spec.width) {
      throw ConfigError("frame " + std::to_string(spec.height) + "x" + std::to_string(spec.width) +
                        " is smaller than sprite " + std::to_string(sh) + "x" + std::to_string(sw));
    }
    const std::size_t max_r = spec.height - sh, max_c = spec.width - sw;
    if (d.row > max_r || d.col > max_c) throw ConfigError("digit start position outside the frame");
    std::vector<std::size_t> rows(spec.frames, d.row), cols(spec.frames, d.col);
    if (d.motion == Motion::kUpDown) {
      rows = reflect_trajectory(d.row, d.direction, spec.speed, max_r, spec.frames);
    } else {
      cols = reflect_trajectory(d.col, d.direction, spec.speed, max_c, spec.frames);
    }
    std::vector<std::pair<std::size_t, std::size_t>> track;
    for (std::size_t t = 0; t < spec.frames; ++t) {
      track.emplace_back(rows[t], cols[t]);
      float* frame = canvas.ptr() + t * spec.height * spec.width;
      for (std::size_t y = 0; y < sh; ++y) {
        for (std::size_t x = 0; x < sw; ++x) {
          float& px = frame[(rows[t] + y) * spec.width + cols[t] + x];
          px = std::max(px, sp[y * sw + x]);
        }
      }
    }
    out.positions.push_back(std::move(track));
  }
  for (auto& v : canvas.data()) v = 2.0f * v - 1.0f;
  out.video = std::move(canvas);
  return out;
}

/// Draws a random spec: digit and motion uniform over the given sets, start
/// uniform over valid positions, direction uniform.
inline BouncingSpec random_spec(Rng& rng, std::size_t height, std::size_t width, std::size_t frames,
                                std::size_t speed, std::size_t sprite_size, std::size_t num_digits,
                                const std::vector<std::size_t>& digits, const std::vector<Motion>& motions,
                                const SpriteSet& sprites) {
  if (sprite_size > height || sprite_size > width) {
    throw ConfigError("frame " + std::to_string(height) + "x" + std::to_string(width) + " is smaller than sprite " +
                      std::to_string(sprite_size));
  }
  BouncingSpec s;
  s.height = height;
  s.width = width;
  s.frames = frames;
  s.speed = speed;
  for (std::size_t i = 0; i < num_digits; ++i) {
    DigitTrack d;
    d.digit = digits[rng.uniform_index(digits.size())];
    d.motion = motions[rng.uniform_index(motions.size())];
    const std::size_t count = sprites.has(d.digit) ? sprites.by_class[d.digit].size() : 1;
    d.sprite_index = rng.uniform_index(count);
    d.row = rng.uniform_index(height - sprite_size + 1);
    d.col = rng.uniform_index(width - sprite_size + 1);
    d.direction = rng.uniform() < 0.5 ? -1 : 1;
    s.digits.push_back(d);
  }
  return s;
}

}  // namespace tgc
