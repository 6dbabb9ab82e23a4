#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "tgc/core/tensor.hpp"

namespace tgc {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

// Tensor container, all integers little-endian:
//   "TGCT" | u8 version (=1) | u8 scalar width (4 = f32, 8 = f64)
//   | u32 rank | u32 extent[rank] | scalar[prod(extent)]
// Bundle of named tensors:
//   "TGCB" | u8 version (=1) | u32 count
//   | count x { u32 name length | name bytes (UTF-8) | tensor container }

inline constexpr std::uint8_t kTensorFormatVersion = 1;

namespace detail {

template <typename U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& in, std::string_view what) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!in) throw FormatError(std::string("truncated stream while reading ") + std::string(what));
  return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected \"") + magic + "\"");
  }
}

}  // namespace detail

template <typename T>
void write_tensor(std::ostream& out, const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  out.write("TGCT", 4);
  detail::put<std::uint8_t>(out, kTensorFormatVersion);
  detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(sizeof(T)));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
  out.write(reinterpret_cast<const char*>(t.ptr()), static_cast<std::streamsize>(t.size() * sizeof(T)));
}

/// Reads one container; scalars stored at the other width are converted.
template <typename T>
Tensor<T> read_tensor(std::istream& in) {
  detail::expect_magic(in, "TGCT");
  const auto version = detail::get<std::uint8_t>(in, "version");
  if (version != kTensorFormatVersion) throw FormatError("unsupported tensor version " + std::to_string(version));
  const auto width = detail::get<std::uint8_t>(in, "scalar width");
  if (width != 4 && width != 8) throw FormatError("unsupported scalar width " + std::to_string(width));
  const auto rank = detail::get<std::uint32_t>(in, "rank");
  if (rank > 16) throw FormatError("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& e : shape) e = detail::get<std::uint32_t>(in, "extent");
  const std::size_t n = shape_size(shape);
  if (width == sizeof(T)) {
    std::vector<T> data(n);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw FormatError("truncated tensor payload");
    return Tensor<T>(std::move(shape), std::move(data));
  }
  std::vector<T> data(n);
  if (width == 4) {
    std::vector<float> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
    if (!in) throw FormatError("truncated tensor payload");
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<T>(raw[i]);
  } else {
    std::vector<double> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 8));
    if (!in) throw FormatError("truncated tensor payload");
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<T>(raw[i]);
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tensor<T>(in);
}

template <typename T>
using TensorBundle = std::map<std::string, Tensor<T>>;

template <typename T>
void save_bundle(const std::filesystem::path& path, const TensorBundle<T>& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("TGCB", 4);
  detail::put<std::uint8_t>(out, kTensorFormatVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.size()));
  for (const auto& [name, t] : bundle) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, t);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
TensorBundle<T> load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_magic(in, "TGCB");
  const auto version = detail::get<std::uint8_t>(in, "version");
  if (version != kTensorFormatVersion) throw FormatError("unsupported bundle version " + std::to_string(version));
  const auto count = detail::get<std::uint32_t>(in, "count");
  TensorBundle<T> bundle;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get<std::uint32_t>(in, "name length");
    if (len > 4096) throw FormatError("implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw FormatError("truncated tensor name");
    bundle.emplace(std::move(name), read_tensor<T>(in));
  }
  return bundle;
}

}  // namespace tgc
