#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tgc/core/ops.hpp"
#include "tgc/core/parallel.hpp"

namespace tgc {

using Triple = std::array<std::size_t, 3>;
using Pair = std::array<std::size_t, 2>;

inline std::string triple_str(const Triple& t) {
  return std::to_string(t[0]) + "x" + std::to_string(t[1]) + "x" + std::to_string(t[2]);
}

/// Geometry of a (batched) 3D cross-correlation
///   x[N, Cin, D, H, W] * k[Cout, Cin, kD, kH, kW] -> y[N, Cout, oD, oH, oW].
/// 2D convolutions are the special case D = kD = 1.
struct ConvGeometry {
  std::size_t batch = 1, in_channels = 1, out_channels = 1;
  Triple in{}, kernel{}, stride{1, 1, 1}, pad{}, out{};

  [[nodiscard]] std::size_t in_cells() const { return in[0] * in[1] * in[2]; }
  [[nodiscard]] std::size_t out_cells() const { return out[0] * out[1] * out[2]; }
  [[nodiscard]] std::size_t kernel_cells() const { return kernel[0] * kernel[1] * kernel[2]; }
  [[nodiscard]] std::size_t col_rows() const { return in_channels * kernel_cells(); }

  /// Fills `out` from the forward-convolution extent rule.
  void infer_conv_output() {
    for (int d = 0; d < 3; ++d) {
      if (stride[d] == 0) throw DimensionError("convolution stride must be positive");
      const std::size_t padded = in[d] + 2 * pad[d];
      if (kernel[d] == 0 || kernel[d] > padded) {
        throw DimensionError("kernel " + triple_str(kernel) + " larger than padded input " + triple_str(in) +
                             " (pad " + triple_str(pad) + ")");
      }
      out[d] = (padded - kernel[d]) / stride[d] + 1;
    }
  }
};

namespace detail {

/// Samples per GEMM chunk, bounding the column buffer at ~4M scalars.
inline std::size_t conv_chunk(const ConvGeometry& g) {
  const std::size_t per_sample = g.col_rows() * g.out_cells();
  const std::size_t budget = std::size_t{1} << 22;
  return std::max<std::size_t>(1, std::min(g.batch, budget / std::max<std::size_t>(1, per_sample)));
}

/// Writes the columns of samples [n0, n0+count) into col[rows, count*P].
template <typename T>
void im2col(const T* x, const ConvGeometry& g, std::size_t n0, std::size_t count, T* col) {
  const std::size_t P = g.out_cells(), ld = count * P;
  parallel_for(count, [&](std::size_t local) {
    const T* xs = x + (n0 + local) * g.in_channels * g.in_cells();
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const T* xc = xs + ci * g.in_cells();
      for (std::size_t kd = 0; kd < g.kernel[0]; ++kd) {
        for (std::size_t kh = 0; kh < g.kernel[1]; ++kh) {
          for (std::size_t kw = 0; kw < g.kernel[2]; ++kw) {
            const std::size_t row = ((ci * g.kernel[0] + kd) * g.kernel[1] + kh) * g.kernel[2] + kw;
            T* dst = col + row * ld + local * P;
            std::size_t p = 0;
            for (std::size_t od = 0; od < g.out[0]; ++od) {
              const long id = static_cast<long>(od * g.stride[0] + kd) - static_cast<long>(g.pad[0]);
              const bool dval = id >= 0 && id < static_cast<long>(g.in[0]);
              for (std::size_t oh = 0; oh < g.out[1]; ++oh) {
                const long ih = static_cast<long>(oh * g.stride[1] + kh) - static_cast<long>(g.pad[1]);
                const bool hval = dval && ih >= 0 && ih < static_cast<long>(g.in[1]);
                const T* xrow = hval ? xc + (static_cast<std::size_t>(id) * g.in[1] + ih) * g.in[2] : nullptr;
                for (std::size_t ow = 0; ow < g.out[2]; ++ow, ++p) {
                  const long iw = static_cast<long>(ow * g.stride[2] + kw) - static_cast<long>(g.pad[2]);
                  dst[p] = (hval && iw >= 0 && iw < static_cast<long>(g.in[2])) ? xrow[iw] : T{0};
                }
              }
            }
          }
        }
      }
    }
  });
}

/// Adds the columns col[rows, count*P] back into samples [n0, n0+count) of dx.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, std::size_t n0, std::size_t count, T* dx) {
  const std::size_t P = g.out_cells(), ld = count * P;
  parallel_for(count, [&](std::size_t local) {
    T* xs = dx + (n0 + local) * g.in_channels * g.in_cells();
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      T* xc = xs + ci * g.in_cells();
      for (std::size_t kd = 0; kd < g.kernel[0]; ++kd) {
        for (std::size_t kh = 0; kh < g.kernel[1]; ++kh) {
          for (std::size_t kw = 0; kw < g.kernel[2]; ++kw) {
            const std::size_t row = ((ci * g.kernel[0] + kd) * g.kernel[1] + kh) * g.kernel[2] + kw;
            const T* src = col + row * ld + local * P;
            std::size_t p = 0;
            for (std::size_t od = 0; od < g.out[0]; ++od) {
              const long id = static_cast<long>(od * g.stride[0] + kd) - static_cast<long>(g.pad[0]);
              const bool dval = id >= 0 && id < static_cast<long>(g.in[0]);
              for (std::size_t oh = 0; oh < g.out[1]; ++oh) {
                const long ih = static_cast<long>(oh * g.stride[1] + kh) - static_cast<long>(g.pad[1]);
                const bool hval = dval && ih >= 0 && ih < static_cast<long>(g.in[1]);
                if (!hval) {
                  p += g.out[2];
                  continue;
                }
                T* xrow = xc + (static_cast<std::size_t>(id) * g.in[1] + ih) * g.in[2];
                for (std::size_t ow = 0; ow < g.out[2]; ++ow, ++p) {
                  const long iw = static_cast<long>(ow * g.stride[2] + kw) - static_cast<long>(g.pad[2]);
                  if (iw >= 0 && iw < static_cast<long>(g.in[2])) xrow[iw] += src[p];
                }
              }
            }
          }
        }
      }
    }
  });
}

/// [N, C, P] block of samples [n0, n0+count) <-> [C, count*P] matrix.
template <typename T>
void gather_channels(const T* y, std::size_t channels, std::size_t P, std::size_t n0, std::size_t count, T* m) {
  for (std::size_t local = 0; local < count; ++local) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::copy_n(y + ((n0 + local) * channels + c) * P, P, m + c * count * P + local * P);
    }
  }
}

template <typename T>
void scatter_channels(const T* m, std::size_t channels, std::size_t P, std::size_t n0, std::size_t count, T* y,
                      bool accumulate) {
  for (std::size_t local = 0; local < count; ++local) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* src = m + c * count * P + local * P;
      T* dst = y + ((n0 + local) * channels + c) * P;
      if (accumulate) {
        for (std::size_t p = 0; p < P; ++p) dst[p] += src[p];
      } else {
        std::copy_n(src, P, dst);
      }
    }
  }
}

}  // namespace detail

/// y = conv(x, k); x[N, Cin, D, H, W] flat, k[Cout, Cin, K] flat.
template <typename T>
void conv_forward(const T* x, const T* k, const ConvGeometry& g, T* y) {
  const std::size_t P = g.out_cells(), R = g.col_rows(), chunk = detail::conv_chunk(g);
  std::vector<T> col, ym;
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t count = std::min(chunk, g.batch - n0);
    col.resize(R * count * P);
    ym.resize(g.out_channels * count * P);
    detail::im2col(x, g, n0, count, col.data());
    MatMap<T>(ym.data(), g.out_channels, count * P).noalias() =
        ConstMatMap<T>(k, g.out_channels, R) * ConstMatMap<T>(col.data(), R, count * P);
    detail::scatter_channels(ym.data(), g.out_channels, P, n0, count, y, false);
  }
}

/// dx += conv(., k)^T dy.
template <typename T>
void conv_backward_input(const T* dy, const T* k, const ConvGeometry& g, T* dx) {
  const std::size_t P = g.out_cells(), R = g.col_rows(), chunk = detail::conv_chunk(g);
  std::vector<T> col, gm;
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t count = std::min(chunk, g.batch - n0);
    gm.resize(g.out_channels * count * P);
    col.resize(R * count * P);
    detail::gather_channels(dy, g.out_channels, P, n0, count, gm.data());
    MatMap<T>(col.data(), R, count * P).noalias() =
        ConstMatMap<T>(k, g.out_channels, R).transpose() * ConstMatMap<T>(gm.data(), g.out_channels, count * P);
    detail::col2im(col.data(), g, n0, count, dx);
  }
}

/// dk += dy (x) columns(x).
template <typename T>
void conv_backward_weight(const T* x, const T* dy, const ConvGeometry& g, T* dk) {
  const std::size_t P = g.out_cells(), R = g.col_rows(), chunk = detail::conv_chunk(g);
  std::vector<T> col, gm;
  MatMap<T> dkm(dk, g.out_channels, R);
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t count = std::min(chunk, g.batch - n0);
    gm.resize(g.out_channels * count * P);
    col.resize(R * count * P);
    detail::gather_channels(dy, g.out_channels, P, n0, count, gm.data());
    detail::im2col(x, g, n0, count, col.data());
    dkm.noalias() += ConstMatMap<T>(gm.data(), g.out_channels, count * P) *
                     ConstMatMap<T>(col.data(), R, count * P).transpose();
  }
}

namespace detail {

/// Normalizes x to rank 5 and returns whether it was unbatched.
inline bool batched_5d(const Shape& s, std::size_t spatial_rank, Shape& out5, std::string_view what) {
  const std::size_t base = spatial_rank + 1;
  if (s.size() != base && s.size() != base + 1) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(base) + " or " +
                         std::to_string(base + 1) + " input, got " + shape_str(s));
  }
  const bool unbatched = s.size() == base;
  const std::size_t off = unbatched ? 0 : 1;
  out5 = {unbatched ? 1 : s[0], s[off]};
  for (std::size_t i = 0; i < 3 - spatial_rank; ++i) out5.push_back(1);
  for (std::size_t i = 0; i < spatial_rank; ++i) out5.push_back(s[off + 1 + i]);
  return unbatched;
}

inline Shape output_shape(bool unbatched, std::size_t spatial_rank, std::size_t n, std::size_t c, const Triple& cells) {
  Shape s;
  if (!unbatched) s.push_back(n);
  s.push_back(c);
  for (std::size_t i = 3 - spatial_rank; i < 3; ++i) s.push_back(cells[i]);
  return s;
}

template <typename T>
Var<T> conv_impl(const Var<T>& x, const Var<T>& k, std::size_t spatial_rank, Triple stride, Triple pad,
                 std::string_view tag) {
  Shape x5;
  const bool unbatched = batched_5d(x.shape(), spatial_rank, x5, tag);
  const Shape& ks = k.shape();
  if (ks.size() != spatial_rank + 2 || ks[1] != x5[1]) {
    throw DimensionError(std::string(tag) + ": kernel " + shape_str(ks) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  ConvGeometry g;
  g.batch = x5[0];
  g.in_channels = x5[1];
  g.out_channels = ks[0];
  g.in = {x5[2], x5[3], x5[4]};
  g.kernel = {1, 1, 1};
  for (std::size_t i = 0; i < spatial_rank; ++i) g.kernel[3 - spatial_rank + i] = ks[2 + i];
  g.stride = stride;
  g.pad = pad;
  g.infer_conv_output();
  Tensor<T> y(output_shape(unbatched, spatial_rank, g.batch, g.out_channels, g.out));
  conv_forward(x.value().ptr(), k.value().ptr(), g, y.ptr());
  return make_op<T>(std::move(y), tag, {x, k},
                    [g](const DiffNode<T>& self, const Tensor<T>& gy, std::span<Tensor<T>* const> pg) {
                      if (pg[0]) conv_backward_input(gy.ptr(), self.parents[1]->value.ptr(), g, pg[0]->ptr());
                      if (pg[1]) conv_backward_weight(self.parents[0]->value.ptr(), gy.ptr(), g, pg[1]->ptr());
                    });
}

}  // namespace detail

/// 2D cross-correlation. x: [Cin, H, W] or [N, Cin, H, W]; k: [Cout, Cin, kH, kW].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& k, Pair stride = {1, 1}, Pair pad = {0, 0}) {
  return detail::conv_impl(x, k, 2, Triple{1, stride[0], stride[1]}, Triple{0, pad[0], pad[1]}, "conv2d");
}

/// 3D cross-correlation. x: [Cin, L, H, W] or [N, Cin, L, H, W]; k: [Cout, Cin, kL, kH, kW].
template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& k, Triple stride = {1, 1, 1}, Triple pad = {0, 0, 0}) {
  return detail::conv_impl(x, k, 3, stride, pad, "conv3d");
}

/// Output extent of a transposed convolution along one axis; throws when the
/// result is not positive.
inline std::size_t transposed_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad,
                                     std::size_t output_padding) {
  const long v = (static_cast<long>(in) - 1) * static_cast<long>(stride) - 2 * static_cast<long>(pad) +
                 static_cast<long>(kernel) + static_cast<long>(output_padding);
  if (v <= 0) {
    throw DimensionError("transposed convolution output extent " + std::to_string(v) + " is not positive");
  }
  return static_cast<std::size_t>(v);
}

/// 3D transposed convolution, the adjoint of conv3d with the same kernel.
/// x: [Cin, L, H, W] or batched; k: [Cin, Cout, kL, kH, kW].
/// `output_padding` (< stride) extends the far edge so that shapes which the
/// forward rule maps together can be recovered exactly.
template <typename T>
Var<T> conv3d_transposed(const Var<T>& x, const Var<T>& k, Triple stride = {1, 1, 1}, Triple pad = {0, 0, 0},
                         Triple output_padding = {0, 0, 0}) {
  Shape x5;
  const bool unbatched = detail::batched_5d(x.shape(), 3, x5, "conv3d_transposed");
  const Shape& ks = k.shape();
  if (ks.size() != 5 || ks[0] != x5[1]) {
    throw DimensionError("conv3d_transposed: kernel " + shape_str(ks) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  for (std::size_t d = 0; d < 3; ++d) {
    if (stride[d] == 0) throw DimensionError("conv3d_transposed: stride must be positive");
    if (output_padding[d] >= stride[d] && output_padding[d] != 0) {
      throw DimensionError("conv3d_transposed: output padding must be smaller than stride");
    }
  }
  // The geometry is that of the forward convolution whose adjoint we apply.
  ConvGeometry g;
  g.batch = x5[0];
  g.out_channels = ks[0];
  g.in_channels = ks[1];
  g.kernel = {ks[2], ks[3], ks[4]};
  g.stride = stride;
  g.pad = pad;
  for (std::size_t d = 0; d < 3; ++d) {
    g.in[d] = transposed_extent(x5[2 + d], g.kernel[d], stride[d], pad[d], output_padding[d]);
  }
  g.infer_conv_output();
  for (std::size_t d = 0; d < 3; ++d) {
    if (g.out[d] != x5[2 + d]) throw DimensionError("conv3d_transposed: inconsistent geometry");
  }
  Tensor<T> y(detail::output_shape(unbatched, 3, g.batch, g.in_channels, g.in));
  conv_backward_input(x.value().ptr(), k.value().ptr(), g, y.ptr());
  return make_op<T>(std::move(y), "conv3d_transposed", {x, k},
                    [g](const DiffNode<T>& self, const Tensor<T>& gy, std::span<Tensor<T>* const> pg) {
                      if (pg[0]) {
                        Tensor<T> dx(self.parents[0]->value.shape());
                        conv_forward(gy.ptr(), self.parents[1]->value.ptr(), g, dx.ptr());
                        *pg[0] += dx;
                      }
                      if (pg[1]) conv_backward_weight(gy.ptr(), self.parents[0]->value.ptr(), g, pg[1]->ptr());
                    });
}

}  // namespace tgc
