#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgc/core/serialize.hpp"

namespace tgc {

enum class VideoFormat { kGif, kPnm, kRaw };

inline VideoFormat parse_video_format(const std::string& name) {
  if (name == "gif") return VideoFormat::kGif;
  if (name == "pnm") return VideoFormat::kPnm;
  if (name == "raw" || name == "tgct") return VideoFormat::kRaw;
  throw InputError("unknown video format '" + name + "' (expected gif, pnm or raw)");
}

inline std::string video_extension(VideoFormat f) {
  switch (f) {
    case VideoFormat::kGif: return ".gif";
    case VideoFormat::kRaw: return ".tgct";
    default: return "";
  }
}

/// [-1, 1] -> {0..255}; -1 -> 0, +1 -> 255.
inline std::uint8_t quantize_pixel(float v) {
  const float q = std::round((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f);
  return static_cast<std::uint8_t>(q);
}
inline float dequantize_pixel(std::uint8_t q) { return static_cast<float>(q) / 127.5f - 1.0f; }

namespace gif {

struct Frames {
  std::size_t width = 0, height = 0;
  std::vector<std::array<std::uint8_t, 3>> palette;
  std::vector<std::vector<std::uint8_t>> indices;  // one per frame
};

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void write(std::uint32_t code, int width) {
    acc_ |= code << bits_;
    bits_ += width;
    while (bits_ >= 8) {
      out_.push_back(static_cast<std::uint8_t>(acc_ & 0xFF));
      acc_ >>= 8;
      bits_ -= 8;
    }
  }
  void flush() {
    if (bits_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ & 0xFF));
    acc_ = 0;
    bits_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint32_t acc_ = 0;
  int bits_ = 0;
};

/// Variable-width LZW with 8-bit minimum code size.
inline std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& px) {
  constexpr std::uint32_t kClear = 256, kEoi = 257;
  std::vector<std::uint8_t> out;
  BitWriter bw(out);
  std::unordered_map<std::uint32_t, std::uint32_t> dict;
  std::uint32_t next = 258;
  int width = 9;
  bw.write(kClear, width);
  if (!px.empty()) {
    std::uint32_t prefix = px[0];
    for (std::size_t i = 1; i < px.size(); ++i) {
      const std::uint32_t key = (prefix << 8) | px[i];
      auto it = dict.find(key);
      if (it != dict.end()) {
        prefix = it->second;
        continue;
      }
      bw.write(prefix, width);
      dict.emplace(key, next);
      if (next == (1u << width) && width < 12) ++width;
      ++next;
      if (next == 4096) {
        bw.write(kClear, width);
        dict.clear();
        next = 258;
        width = 9;
      }
      prefix = px[i];
    }
    bw.write(prefix, width);
  }
  bw.write(kEoi, width);
  bw.flush();
  return out;
}

inline std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code, std::size_t expect) {
  const std::uint32_t clear = 1u << min_code, eoi = clear + 1;
  std::vector<std::vector<std::uint8_t>> dict;
  auto reset = [&] {
    dict.assign(clear + 2, {});
    for (std::uint32_t i = 0; i < clear; ++i) dict[i] = {static_cast<std::uint8_t>(i)};
  };
  reset();
  int width = min_code + 1;
  std::vector<std::uint8_t> out;
  out.reserve(expect);
  std::size_t bitpos = 0;
  long prev = -1;
  while (true) {
    if (bitpos + static_cast<std::size_t>(width) > data.size() * 8) throw FormatError("GIF: truncated LZW stream");
    std::uint32_t code = 0;
    for (int b = 0; b < width; ++b, ++bitpos) code |= ((data[bitpos >> 3] >> (bitpos & 7)) & 1u) << b;
    if (code == clear) {
      reset();
      width = min_code + 1;
      prev = -1;
      continue;
    }
    if (code == eoi) break;
    std::vector<std::uint8_t> entry;
    if (prev < 0) {
      if (code >= dict.size()) throw FormatError("GIF: invalid first LZW code");
      entry = dict[code];
    } else {
      if (code < dict.size()) {
        entry = dict[code];
      } else if (code == dict.size()) {
        entry = dict[prev];
        entry.push_back(dict[prev][0]);
      } else {
        throw FormatError("GIF: invalid LZW code " + std::to_string(code));
      }
      if (dict.size() < 4096) {
        auto add = dict[prev];
        add.push_back(entry[0]);
        dict.push_back(std::move(add));
        if (dict.size() == (1u << width) && width < 12) ++width;
      }
    }
    out.insert(out.end(), entry.begin(), entry.end());
    prev = code;
  }
  return out;
}

inline void put16(std::ofstream& o, std::uint16_t v) {
  o.put(static_cast<char>(v & 0xFF));
  o.put(static_cast<char>(v >> 8));
}

inline void write(const std::filesystem::path& path, const Frames& f, std::uint16_t delay_cs = 10) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write " + path.string());
  o.write("GIF89a", 6);
  put16(o, static_cast<std::uint16_t>(f.width));
  put16(o, static_cast<std::uint16_t>(f.height));
  o.put(static_cast<char>(0xF7));  // global table, 8 bits, 256 entries
  o.put(0);
  o.put(0);
  for (std::size_t i = 0; i < 256; ++i) {
    const auto c = i < f.palette.size() ? f.palette[i] : std::array<std::uint8_t, 3>{0, 0, 0};
    o.write(reinterpret_cast<const char*>(c.data()), 3);
  }
  const unsigned char loop[] = {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E', '2', '.', '0', 0x03, 0x01, 0, 0, 0};
  o.write(reinterpret_cast<const char*>(loop), sizeof(loop));
  for (const auto& frame : f.indices) {
    const unsigned char gce[] = {0x21, 0xF9, 0x04, 0x00, static_cast<unsigned char>(delay_cs & 0xFF),
                                 static_cast<unsigned char>(delay_cs >> 8), 0x00, 0x00};
    o.write(reinterpret_cast<const char*>(gce), sizeof(gce));
    o.put(0x2C);
    put16(o, 0);
    put16(o, 0);
    put16(o, static_cast<std::uint16_t>(f.width));
    put16(o, static_cast<std::uint16_t>(f.height));
    o.put(0);
    o.put(8);
    const auto data = lzw_encode(frame);
    for (std::size_t i = 0; i < data.size(); i += 255) {
      const std::size_t n = std::min<std::size_t>(255, data.size() - i);
      o.put(static_cast<char>(n));
      o.write(reinterpret_cast<const char*>(data.data() + i), static_cast<std::streamsize>(n));
    }
    o.put(0);
  }
  o.put(0x3B);
  if (!o) throw IoError("failed writing " + path.string());
}

inline Frames read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(in), {}};
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > b.size()) throw FormatError("GIF " + path.string() + ": truncated at byte offset " + std::to_string(pos));
  };
  auto u8 = [&] {
    need(1);
    return b[pos++];
  };
  auto u16 = [&] {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
    pos += 2;
    return v;
  };
  auto skip_blocks = [&] {
    for (std::uint8_t n = u8(); n; n = u8()) {
      need(n);
      pos += n;
    }
  };
  need(6);
  const std::string sig(b.begin(), b.begin() + 6);
  if (sig != "GIF89a" && sig != "GIF87a") throw FormatError("GIF " + path.string() + ": bad signature");
  pos = 6;
  Frames f;
  f.width = u16();
  f.height = u16();
  const std::uint8_t flags = u8();
  u8();
  u8();
  auto read_palette = [&](int bits) {
    std::vector<std::array<std::uint8_t, 3>> p(1u << bits);
    for (auto& c : p) {
      c[0] = u8();
      c[1] = u8();
      c[2] = u8();
    }
    return p;
  };
  if (flags & 0x80) f.palette = read_palette((flags & 7) + 1);
  while (true) {
    const std::uint8_t tag = u8();
    if (tag == 0x3B) break;
    if (tag == 0x21) {
      u8();
      skip_blocks();
      continue;
    }
    if (tag != 0x2C) throw FormatError("GIF " + path.string() + ": unexpected block at byte offset " + std::to_string(pos - 1));
    const std::size_t left = u16(), top = u16(), w = u16(), h = u16();
    const std::uint8_t iflags = u8();
    if (iflags & 0x80) f.palette = read_palette((iflags & 7) + 1);
    if (iflags & 0x40) throw FormatError("GIF " + path.string() + ": interlaced frames are not supported");
    const int min_code = u8();
    if (min_code < 2 || min_code > 8) throw FormatError("GIF " + path.string() + ": bad LZW code size");
    std::vector<std::uint8_t> data;
    for (std::uint8_t n = u8(); n; n = u8()) {
      need(n);
      data.insert(data.end(), b.begin() + static_cast<long>(pos), b.begin() + static_cast<long>(pos + n));
      pos += n;
    }
    auto px = lzw_decode(data, min_code, w * h);
    if (px.size() < w * h) throw FormatError("GIF " + path.string() + ": frame has too few pixels");
    std::vector<std::uint8_t> frame = f.indices.empty() ? std::vector<std::uint8_t>(f.width * f.height, 0)
                                                        : f.indices.back();
    for (std::size_t y = 0; y < h && top + y < f.height; ++y) {
      for (std::size_t x = 0; x < w && left + x < f.width; ++x) frame[(top + y) * f.width + left + x] = px[y * w + x];
    }
    f.indices.push_back(std::move(frame));
  }
  return f;
}

/// 3-3-2 palette index for a color pixel.
inline std::uint8_t rgb332(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(((r * 7 + 127) / 255) << 5 | ((g * 7 + 127) / 255) << 2 | ((b * 3 + 127) / 255));
}

}  // namespace gif

namespace detail {
inline void check_video(const Tensor<float>& v) {
  if (v.rank() != 4 || (v.dim(0) != 1 && v.dim(0) != 3)) {
    throw DimensionError("video must be [1 or 3, L, H, W], got " + shape_str(v.shape()));
  }
}
}  // namespace detail

/// Grayscale videos use a 256-level gray palette (exact to quantization);
/// color videos use a 3-3-2 palette.
inline void write_gif(const std::filesystem::path& path, const Tensor<float>& v) {
  detail::check_video(v);
  const std::size_t C = v.dim(0), L = v.dim(1), H = v.dim(2), W = v.dim(3), P = H * W;
  gif::Frames f;
  f.width = W;
  f.height = H;
  f.palette.resize(256);
  for (std::size_t i = 0; i < 256; ++i) {
    if (C == 1) {
      const auto g = static_cast<std::uint8_t>(i);
      f.palette[i] = {g, g, g};
    } else {
      f.palette[i] = {static_cast<std::uint8_t>(((i >> 5) & 7) * 255 / 7),
                      static_cast<std::uint8_t>(((i >> 2) & 7) * 255 / 7), static_cast<std::uint8_t>((i & 3) * 255 / 3)};
    }
  }
  for (std::size_t t = 0; t < L; ++t) {
    std::vector<std::uint8_t> idx(P);
    for (std::size_t p = 0; p < P; ++p) {
      if (C == 1) {
        idx[p] = quantize_pixel(v[t * P + p]);
      } else {
        idx[p] = gif::rgb332(quantize_pixel(v[(0 * L + t) * P + p]), quantize_pixel(v[(1 * L + t) * P + p]),
                             quantize_pixel(v[(2 * L + t) * P + p]));
      }
    }
    f.indices.push_back(std::move(idx));
  }
  gif::write(path, f);
}

inline Tensor<float> read_gif(const std::filesystem::path& path) {
  const auto f = gif::read(path);
  if (f.indices.empty()) throw FormatError("GIF " + path.string() + " has no frames");
  bool gray = true;
  for (const auto& c : f.palette) gray = gray && c[0] == c[1] && c[1] == c[2];
  const std::size_t C = gray ? 1 : 3, L = f.indices.size(), P = f.width * f.height;
  Tensor<float> v(Shape{C, L, f.height, f.width});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t p = 0; p < P; ++p) {
      const std::uint8_t i = f.indices[t][p];
      if (i >= f.palette.size()) throw FormatError("GIF " + path.string() + ": palette index out of range");
      for (std::size_t c = 0; c < C; ++c) v[(c * L + t) * P + p] = dequantize_pixel(f.palette[i][c]);
    }
  }
  return v;
}

/// Directory of frame_NNNN.pgm (1 channel) or .ppm (3 channels).
inline void write_pnm_frames(const std::filesystem::path& dir, const Tensor<float>& v) {
  detail::check_video(v);
  std::filesystem::create_directories(dir);
  const std::size_t C = v.dim(0), L = v.dim(1), H = v.dim(2), W = v.dim(3), P = H * W;
  for (std::size_t t = 0; t < L; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.%s", t, C == 1 ? "pgm" : "ppm");
    std::ofstream o(dir / name, std::ios::binary);
    if (!o) throw IoError("cannot write " + (dir / name).string());
    o << (C == 1 ? "P5" : "P6") << "\n" << W << " " << H << "\n255\n";
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c) o.put(static_cast<char>(quantize_pixel(v[(c * L + t) * P + p])));
    }
  }
}

inline Tensor<float> read_pnm_frames(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.path().filename().string().rfind("frame_", 0) == 0 && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
  }
  if (files.empty()) throw FormatError("no frame_*.pgm/ppm files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::size_t C = 0, H = 0, W = 0;
  std::vector<std::vector<std::uint8_t>> frames;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::string magic;
    std::size_t w = 0, h = 0, maxv = 0;
    in >> magic >> w >> h >> maxv;
    in.get();
    if (!in || (magic != "P5" && magic != "P6") || maxv != 255) throw FormatError("bad PNM header in " + f.string());
    const std::size_t c = magic == "P5" ? 1 : 3;
    if (frames.empty()) {
      C = c;
      H = h;
      W = w;
    } else if (c != C || h != H || w != W) {
      throw FormatError("PNM frame " + f.string() + " differs in size from the first frame");
    }
    std::vector<std::uint8_t> buf(c * w * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError("truncated PNM frame " + f.string());
    frames.push_back(std::move(buf));
  }
  const std::size_t L = frames.size(), P = H * W;
  Tensor<float> v(Shape{C, L, H, W});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c) v[(c * L + t) * P + p] = dequantize_pixel(frames[t][p * C + c]);
    }
  }
  return v;
}

inline void export_video(const Tensor<float>& v, const std::filesystem::path& path, VideoFormat format) {
  if (path.has_parent_path() && format != VideoFormat::kPnm) std::filesystem::create_directories(path.parent_path());
  switch (format) {
    case VideoFormat::kGif: write_gif(path, v); break;
    case VideoFormat::kPnm: write_pnm_frames(path, v); break;
    case VideoFormat::kRaw:
      detail::check_video(v);
      save_tensor(path, v);
      break;
  }
}

/// Format inferred from the path: .gif, .tgct, or a frame directory.
inline Tensor<float> import_video(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return read_pnm_frames(path);
  if (!std::filesystem::exists(path)) throw IoError("no such video " + path.string());
  const auto ext = path.extension();
  if (ext == ".gif") return read_gif(path);
  if (ext == ".tgct") return load_tensor<float>(path);
  throw InputError("cannot infer video format of " + path.string());
}

/// Videos side by side: [C, L, H, W] x n -> [C, L, H, n W + gaps].
inline Tensor<float> tile_videos(const std::vector<Tensor<float>>& vids, std::size_t gap = 1) {
  if (vids.empty()) throw InputError("no videos to tile");
  const std::size_t C = vids[0].dim(0), L = vids[0].dim(1), H = vids[0].dim(2), W = vids[0].dim(3);
  const std::size_t TW = vids.size() * W + (vids.size() - 1) * gap;
  Tensor<float> out(Shape{C, L, H, TW}, -1.0f);
  for (std::size_t i = 0; i < vids.size(); ++i) {
    vids[i].require_same_shape(vids[0], "tile_videos");
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < L; ++t)
        for (std::size_t y = 0; y < H; ++y)
          std::copy_n(vids[i].ptr() + ((c * L + t) * H + y) * W, W, out.ptr() + ((c * L + t) * H + y) * TW + i * (W + gap));
  }
  return out;
}

}  // namespace tgc
