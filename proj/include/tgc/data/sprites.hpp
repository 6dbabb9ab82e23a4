#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "tgc/core/tensor.hpp"

namespace tgc {

/// Grayscale digit bitmaps grouped by class 0-9; values in [0, 1].
struct SpriteSet {
  std::array<std::vector<Tensor<float>>, 10> by_class;

  [[nodiscard]] std::size_t class_count() const {
    return static_cast<std::size_t>(
        std::count_if(by_class.begin(), by_class.end(), [](const auto& v) { return !v.empty(); }));
  }
  [[nodiscard]] bool has(std::size_t digit) const { return digit < 10 && !by_class[digit].empty(); }

  [[nodiscard]] std::size_t sprite_height() const {
    for (const auto& v : by_class) {
      if (!v.empty()) return v.front().dim(0);
    }
    return 0;
  }
};

/// Area-averaging resize of a [H, W] image.
inline Tensor<float> resize_area(const Tensor<float>& img, std::size_t oh, std::size_t ow) {
  const std::size_t ih = img.dim(0), iw = img.dim(1);
  if (ih == oh && iw == ow) return img;
  Tensor<float> out(Shape{oh, ow});
  const double sy = static_cast<double>(ih) / static_cast<double>(oh);
  const double sx = static_cast<double>(iw) / static_cast<double>(ow);
  for (std::size_t r = 0; r < oh; ++r) {
    const double y0 = static_cast<double>(r) * sy, y1 = y0 + sy;
    for (std::size_t c = 0; c < ow; ++c) {
      const double x0 = static_cast<double>(c) * sx, x1 = x0 + sx;
      double acc = 0, area = 0;
      for (auto y = static_cast<std::size_t>(y0); y < ih && static_cast<double>(y) < y1; ++y) {
        const double wy = std::min<double>(y1, y + 1.0) - std::max<double>(y0, static_cast<double>(y));
        for (auto x = static_cast<std::size_t>(x0); x < iw && static_cast<double>(x) < x1; ++x) {
          const double wx = std::min<double>(x1, x + 1.0) - std::max<double>(x0, static_cast<double>(x));
          acc += wy * wx * img[y * iw + x];
          area += wy * wx;
        }
      }
      out[r * ow + c] = static_cast<float>(area > 0 ? acc / area : 0.0);
    }
  }
  return out;
}

namespace detail {

struct Pt {
  double x, y;
};
using Stroke = std::vector<Pt>;

/// Points on an ellipse from angle a0 to a1 (degrees; 0 = right, 90 = down).
inline Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int steps = 24) {
  Stroke s;
  for (int i = 0; i <= steps; ++i) {
    const double a = (a0 + (a1 - a0) * i / steps) * std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

inline std::vector<Stroke> digit_strokes(int d) {
  switch (d) {
    case 0: return {arc(0.5, 0.5, 0.2, 0.32, 0, 360, 40)};
    case 1: return {{{0.38, 0.28}, {0.52, 0.17}, {0.52, 0.83}}};
    case 2: return {arc(0.5, 0.35, 0.19, 0.17, 180, 380), {{0.675, 0.41}, {0.3, 0.83}, {0.72, 0.83}}};
    case 3: return {arc(0.5, 0.33, 0.17, 0.16, -160, 90), arc(0.5, 0.66, 0.19, 0.17, -90, 160)};
    case 4: return {{{0.62, 0.83}, {0.62, 0.17}, {0.28, 0.62}, {0.76, 0.62}}};
    case 5: return {{{0.7, 0.17}, {0.36, 0.17}, {0.34, 0.47}}, arc(0.5, 0.63, 0.19, 0.2, -125, 150)};
    case 6: return {{{0.66, 0.18}, {0.5, 0.25}, {0.38, 0.4}, {0.33, 0.62}}, arc(0.5, 0.66, 0.17, 0.17, 0, 360, 32)};
    case 7: return {{{0.28, 0.17}, {0.72, 0.17}, {0.42, 0.83}}};
    case 8: return {arc(0.5, 0.33, 0.15, 0.16, 0, 360, 32), arc(0.5, 0.66, 0.18, 0.17, 0, 360, 32)};
    default: return {arc(0.5, 0.34, 0.17, 0.17, 0, 360, 32), {{0.67, 0.34}, {0.6, 0.83}}};
  }
}

inline double segment_distance(Pt p, Pt a, Pt b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

/// Renders digit d as anti-aliased strokes on a size x size canvas.
inline Tensor<float> render_digit(int d, std::size_t size) {
  const auto strokes = detail::digit_strokes(d);
  const double px = static_cast<double>(size);
  const double half_width = std::max(0.07 * px, 0.8);
  Tensor<float> img(Shape{size, size});
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const detail::Pt p{(static_cast<double>(c) + 0.5) / px, (static_cast<double>(r) + 0.5) / px};
      double best = 1e9;
      for (const auto& s : strokes) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) best = std::min(best, detail::segment_distance(p, s[i], s[i + 1]));
      }
      const double v = std::clamp(half_width - best * px + 0.5, 0.0, 1.0);
      img[r * size + c] = static_cast<float>(v);
    }
  }
  return img;
}

/// One rendered glyph per digit class.
inline SpriteSet builtin_sprites(std::size_t size = 28) {
  SpriteSet s;
  for (int d = 0; d < 10; ++d) s.by_class[d].push_back(render_digit(d, size));
  return s;
}

/// Every sprite resized to size x size.
inline SpriteSet resize_sprites(const SpriteSet& in, std::size_t size) {
  SpriteSet out;
  for (std::size_t d = 0; d < 10; ++d) {
    for (const auto& s : in.by_class[d]) out.by_class[d].push_back(resize_area(s, size, size));
  }
  return out;
}

namespace detail {

inline std::vector<unsigned char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& file) {
  if (off + 4 > b.size()) throw FormatError(file + ": truncated header at byte offset " + std::to_string(off));
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace detail

/// Reads an IDX image file (magic 2051) and label file (magic 2049).
inline SpriteSet load_sprites_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto ib = detail::read_all(images);
  const auto lb = detail::read_all(labels);
  const std::string in = images.string(), ln = labels.string();
  if (const auto m = detail::be32(ib, 0, in); m != 2051) {
    throw FormatError(in + ": bad magic " + std::to_string(m) + " at byte offset 0 (expected 2051)");
  }
  if (const auto m = detail::be32(lb, 0, ln); m != 2049) {
    throw FormatError(ln + ": bad magic " + std::to_string(m) + " at byte offset 0 (expected 2049)");
  }
  const std::size_t n = detail::be32(ib, 4, in), rows = detail::be32(ib, 8, in), cols = detail::be32(ib, 12, in);
  const std::size_t nl = detail::be32(lb, 4, ln);
  if (n != nl) {
    throw FormatError("image count " + std::to_string(n) + " (byte offset 4 of " + in + ") differs from label count " +
                      std::to_string(nl) + " (byte offset 4 of " + ln + ")");
  }
  if (rows == 0 || cols == 0) throw FormatError(in + ": zero image extent at byte offset 8");
  const std::size_t need_i = 16 + n * rows * cols, need_l = 8 + n;
  if (ib.size() < need_i) throw FormatError(in + ": truncated at byte offset " + std::to_string(ib.size()));
  if (lb.size() < need_l) throw FormatError(ln + ": truncated at byte offset " + std::to_string(lb.size()));
  SpriteSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned label = lb[8 + i];
    if (label > 9) throw FormatError(ln + ": label " + std::to_string(label) + " at byte offset " + std::to_string(8 + i));
    Tensor<float> img(Shape{rows, cols});
    const unsigned char* p = ib.data() + 16 + i * rows * cols;
    for (std::size_t j = 0; j < rows * cols; ++j) img[j] = static_cast<float>(p[j]) / 255.0f;
    s.by_class[label].push_back(std::move(img));
  }
  return s;
}

}  // namespace tgc
