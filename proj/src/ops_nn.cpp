// Copyright 2026 The bit-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "bit/ops.hpp"
#include "broadcast.hpp"

namespace bit {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<RowMat<T>>;
template <class T>
using CMap = Eigen::Map<const RowMat<T>>;

struct AxisSplit {
  std::int64_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, int axis) {
  AxisSplit a;
  for (int d = 0; d < static_cast<int>(s.size()); ++d) {
    if (d < axis) a.outer *= s[d];
    else if (d == axis) a.extent = s[d];
    else a.inner *= s[d];
  }
  return a;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  if (axis < 0) axis += static_cast<int>(x.rank());
  if (axis < 0 || axis >= x.rank()) throw DimensionError("softmax: axis out of range for " + shape_str(x.shape()));
  const auto sp = split_axis(x.shape(), axis);
  Tensor y = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(x.shape());
    auto dst = o.mutable_data<T>();
    auto src = x.data<T>();
    for (std::int64_t a = 0; a < sp.outer; ++a) {
      for (std::int64_t i = 0; i < sp.inner; ++i) {
        const std::int64_t base = a * sp.extent * sp.inner + i;
        T mx = src[base];
        for (std::int64_t k = 1; k < sp.extent; ++k) mx = std::max(mx, src[base + k * sp.inner]);
        T total = 0;
        for (std::int64_t k = 0; k < sp.extent; ++k) {
          const T e = std::exp(src[base + k * sp.inner] - mx);
          dst[base + k * sp.inner] = e;
          total += e;
        }
        const T inv = 1 / total;
        for (std::int64_t k = 0; k < sp.extent; ++k) dst[base + k * sp.inner] *= inv;
      }
    }
    return o;
  });
  Tensor saved = y.detach();
  return record(y, "softmax", {x}, [saved, sp](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(g.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      Tensor gx = make_tensor<T>(g.shape());
      auto dst = gx.mutable_data<T>();
      auto gy = g.data<T>();
      auto yv = saved.data<T>();
      for (std::int64_t a = 0; a < sp.outer; ++a) {
        for (std::int64_t i = 0; i < sp.inner; ++i) {
          const std::int64_t base = a * sp.extent * sp.inner + i;
          T dot = 0;
          for (std::int64_t k = 0; k < sp.extent; ++k) dot += gy[base + k * sp.inner] * yv[base + k * sp.inner];
          for (std::int64_t k = 0; k < sp.extent; ++k) {
            const auto j = base + k * sp.inner;
            dst[j] = yv[j] * (gy[j] - dot);
          }
        }
      }
      return {gx};
    });
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) throw DimensionError("layer_norm on a scalar");
  const std::int64_t n = x.dim(-1);
  if (gamma.shape() != Shape{n} || beta.shape() != Shape{n}) {
    throw DimensionError(str_cat("layer_norm: affine shape ", shape_str(gamma.shape()), " vs last extent ", n));
  }
  detail::check_same_dtype(x, gamma, "layer_norm");
  detail::check_same_dtype(x, beta, "layer_norm");
  const std::int64_t rows = n ? x.numel() / n : 0;
  Tensor xhat, rstd;
  Tensor y = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(x.shape());
    xhat = make_tensor<T>(x.shape());
    rstd = make_tensor<T>({rows});
    auto dst = o.mutable_data<T>();
    auto xh = xhat.mutable_data<T>();
    auto rs = rstd.mutable_data<T>();
    auto src = x.data<T>();
    auto gm = gamma.data<T>();
    auto bt = beta.data<T>();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = src.data() + r * n;
      T mu = 0;
      for (std::int64_t k = 0; k < n; ++k) mu += row[k];
      mu /= static_cast<T>(n);
      T var = 0;
      for (std::int64_t k = 0; k < n; ++k) var += (row[k] - mu) * (row[k] - mu);
      var /= static_cast<T>(n);
      const T inv = 1 / std::sqrt(var + static_cast<T>(eps));
      rs[r] = inv;
      for (std::int64_t k = 0; k < n; ++k) {
        const T h = (row[k] - mu) * inv;
        xh[r * n + k] = h;
        dst[r * n + k] = h * gm[k] + bt[k];
      }
    }
    return o;
  });
  return record(y, "layer_norm", {x, gamma, beta}, [xhat, rstd, gamma, n, rows](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(g.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      Tensor gx = make_tensor<T>(g.shape());
      Tensor gg = make_tensor<T>({n});
      Tensor gb = make_tensor<T>({n});
      auto dx = gx.mutable_data<T>();
      auto dg = gg.mutable_data<T>();
      auto db = gb.mutable_data<T>();
      auto gy = g.data<T>();
      auto xh = xhat.data<T>();
      auto rs = rstd.data<T>();
      auto gm = gamma.data<T>();
      for (std::int64_t r = 0; r < rows; ++r) {
        T s1 = 0, s2 = 0;
        for (std::int64_t k = 0; k < n; ++k) {
          const auto j = r * n + k;
          const T gh = gy[j] * gm[k];
          s1 += gh;
          s2 += gh * xh[j];
          dg[k] += gy[j] * xh[j];
          db[k] += gy[j];
        }
        const T inv_n = static_cast<T>(1) / static_cast<T>(n);
        for (std::int64_t k = 0; k < n; ++k) {
          const auto j = r * n + k;
          dx[j] = rs[r] * (gy[j] * gm[k] - inv_n * s1 - xh[j] * inv_n * s2);
        }
      }
      return {gx, gg, gb};
    });
  });
}

namespace {

struct ConvGeom {
  std::int64_t B, C, H, W, O, kh, kw, Ho, Wo;
  int stride, pad;
  PadMode mode;
  std::int64_t ckk() const { return C * kh * kw; }
  std::int64_t hw_out() const { return Ho * Wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// Source pixel for (h, w) in padded coordinates, or -1 for a zero pad.
inline std::int64_t source_pixel(const ConvGeom& g, std::int64_t h, std::int64_t w) {
  if (h >= 0 && h < g.H && w >= 0 && w < g.W) return h * g.W + w;
  if (g.mode == PadMode::zeros) return -1;
  return reflect_index(h, g.H) * g.W + reflect_index(w, g.W);
}

// Row (c, i, j) of the column matrix lists, per output position, the source pixel.
std::shared_ptr<std::vector<std::int64_t>> column_index(const ConvGeom& g) {
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(g.kh * g.kw * g.hw_out()));
  for (std::int64_t i = 0; i < g.kh; ++i) {
    for (std::int64_t j = 0; j < g.kw; ++j) {
      for (std::int64_t oh = 0; oh < g.Ho; ++oh) {
        for (std::int64_t ow = 0; ow < g.Wo; ++ow) {
          idx->push_back(source_pixel(g, oh * g.stride - g.pad + i, ow * g.stride - g.pad + j));
        }
      }
    }
  }
  return idx;
}

template <class T>
void im2col(const T* x, const ConvGeom& g, const std::vector<std::int64_t>& idx, T* cols) {
  const std::int64_t plane = g.H * g.W;
  const std::int64_t kk_hw = g.kh * g.kw * g.hw_out();
  for (std::int64_t c = 0; c < g.C; ++c) {
    const T* src = x + c * plane;
    T* dst = cols + c * kk_hw;
    for (std::int64_t q = 0; q < kk_hw; ++q) dst[q] = idx[q] >= 0 ? src[idx[q]] : T(0);
  }
}

template <class T>
void col2im(const T* cols, const ConvGeom& g, const std::vector<std::int64_t>& idx, T* x) {
  const std::int64_t plane = g.H * g.W;
  const std::int64_t kk_hw = g.kh * g.kw * g.hw_out();
  for (std::int64_t c = 0; c < g.C; ++c) {
    T* dst = x + c * plane;
    const T* src = cols + c * kk_hw;
    for (std::int64_t q = 0; q < kk_hw; ++q) {
      if (idx[q] >= 0) dst[idx[q]] += src[q];
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& opts) {
  if (x.rank() != 4 || weight.rank() != 4) {
    throw DimensionError(str_cat("conv2d expects x[B,C,H,W], w[O,C,kh,kw]; got ", shape_str(x.shape()), ", ",
                                 shape_str(weight.shape())));
  }
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3), 0, 0,
             opts.stride, opts.padding, opts.pad_mode};
  if (weight.dim(1) != g.C) {
    throw DimensionError(str_cat("conv2d channel mismatch: input ", shape_str(x.shape()), ", weight ",
                                 shape_str(weight.shape())));
  }
  if (g.kh % 2 == 0 || g.kw % 2 == 0) throw DimensionError("conv2d: kernel extents must be odd");
  if (opts.stride < 1 || opts.padding < 0) throw DimensionError("conv2d: stride >= 1 and padding >= 0 required");
  if (bias.defined() && bias.shape() != Shape{g.O}) throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()));
  detail::check_same_dtype(x, weight, "conv2d");
  g.Ho = (g.H + 2 * g.pad - g.kh) / g.stride + 1;
  g.Wo = (g.W + 2 * g.pad - g.kw) / g.stride + 1;
  if (g.Ho < 1 || g.Wo < 1) throw DimensionError("conv2d: input smaller than kernel for " + shape_str(x.shape()));

  auto idx = g.pointwise() ? nullptr : column_index(g);
  Tensor cols_all;  // [B, Ckk, HoWo] when not pointwise
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>({g.B, g.O, g.Ho, g.Wo});
    T* po = o.mutable_data<T>().data();
    const T* px = x.data<T>().data();
    const T* pw = weight.data<T>().data();
    if (!g.pointwise()) {
      cols_all = make_tensor<T>({g.B, g.ckk(), g.hw_out()});
      T* pc = cols_all.mutable_data<T>().data();
      for (std::int64_t b = 0; b < g.B; ++b) im2col(px + b * g.C * g.H * g.W, g, *idx, pc + b * g.ckk() * g.hw_out());
    }
    const CMap<T> Wm(pw, g.O, g.ckk());
    for (std::int64_t b = 0; b < g.B; ++b) {
      const T* cols = g.pointwise() ? px + b * g.C * g.H * g.W : cols_all.data<T>().data() + b * g.ckk() * g.hw_out();
      Map<T> Om(po + b * g.O * g.hw_out(), g.O, g.hw_out());
      Om.noalias() = Wm * CMap<T>(cols, g.ckk(), g.hw_out());
      if (bias.defined()) {
        auto pb = bias.data<T>();
        for (std::int64_t oc = 0; oc < g.O; ++oc) Om.row(oc).array() += pb[oc];
      }
    }
    flop_counter().conv_flops += 2 * g.B * g.O * g.ckk() * g.hw_out();
    return o;
  });
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return record(out, "conv2d", inputs, [x, weight, has_bias, g, idx, cols_all](const Tensor& go) -> std::vector<Tensor> {
    return dispatch(go.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      const T* pg = go.data<T>().data();
      Tensor gx, gw, gb;
      if (weight.requires_grad()) {
        gw = make_tensor<T>(weight.shape());
        Map<T> GW(gw.mutable_data<T>().data(), g.O, g.ckk());
        for (std::int64_t b = 0; b < g.B; ++b) {
          const T* cols = g.pointwise() ? x.data<T>().data() + b * g.C * g.H * g.W
                                        : cols_all.data<T>().data() + b * g.ckk() * g.hw_out();
          GW.noalias() += CMap<T>(pg + b * g.O * g.hw_out(), g.O, g.hw_out()) *
                          CMap<T>(cols, g.ckk(), g.hw_out()).transpose();
        }
      }
      if (x.requires_grad()) {
        gx = make_tensor<T>(x.shape());
        T* px = gx.mutable_data<T>().data();
        const CMap<T> Wm(weight.data<T>().data(), g.O, g.ckk());
        RowMat<T> dcols(g.ckk(), g.hw_out());
        for (std::int64_t b = 0; b < g.B; ++b) {
          const CMap<T> Gm(pg + b * g.O * g.hw_out(), g.O, g.hw_out());
          if (g.pointwise()) {
            Map<T>(px + b * g.C * g.H * g.W, g.C, g.hw_out()).noalias() = Wm.transpose() * Gm;
          } else {
            dcols.noalias() = Wm.transpose() * Gm;
            col2im(dcols.data(), g, *idx, px + b * g.C * g.H * g.W);
          }
        }
      }
      if (has_bias) {
        gb = make_tensor<T>({g.O});
        auto db = gb.mutable_data<T>();
        for (std::int64_t b = 0; b < g.B; ++b) {
          for (std::int64_t oc = 0; oc < g.O; ++oc) {
            const T* row = pg + (b * g.O + oc) * g.hw_out();
            T acc = 0;
            for (std::int64_t q = 0; q < g.hw_out(); ++q) acc += row[q];
            db[oc] += acc;
          }
        }
      }
      std::vector<Tensor> grads{gx, gw};
      if (has_bias) grads.push_back(gb);
      return grads;
    });
  });
}

namespace {

struct Lerp {
  std::int64_t i0, i1;
  double w1;
};

std::vector<Lerp> lerp_table(std::int64_t in, std::int64_t out) {
  std::vector<Lerp> t(static_cast<std::size_t>(out));
  const double sc = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) * sc - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::int64_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    const std::int64_t i1 = i0 < in - 1 ? i0 + 1 : i0;
    t[d] = {i0, i1, src - static_cast<double>(i0)};
  }
  return t;
}

}  // namespace

Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  if (x.rank() != 4) throw DimensionError("resize_bilinear expects [B,C,H,W], got " + shape_str(x.shape()));
  if (out_h < 1 || out_w < 1) throw DimensionError(str_cat("resize_bilinear: target extent ", out_h, "x", out_w));
  const auto P = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H == out_h && W == out_w) return x;
  auto th = std::make_shared<std::vector<Lerp>>(lerp_table(H, out_h));
  auto tw = std::make_shared<std::vector<Lerp>>(lerp_table(W, out_w));
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>({x.dim(0), x.dim(1), out_h, out_w});
    auto dst = o.mutable_data<T>();
    auto src = x.data<T>();
    for (std::int64_t p = 0; p < P; ++p) {
      const T* plane = src.data() + p * H * W;
      T* op = dst.data() + p * out_h * out_w;
      for (std::int64_t oh = 0; oh < out_h; ++oh) {
        const auto& lh = (*th)[oh];
        const T a1 = static_cast<T>(lh.w1), a0 = 1 - a1;
        for (std::int64_t ow = 0; ow < out_w; ++ow) {
          const auto& lw = (*tw)[ow];
          const T b1 = static_cast<T>(lw.w1), b0 = 1 - b1;
          op[oh * out_w + ow] = a0 * (b0 * plane[lh.i0 * W + lw.i0] + b1 * plane[lh.i0 * W + lw.i1]) +
                                a1 * (b0 * plane[lh.i1 * W + lw.i0] + b1 * plane[lh.i1 * W + lw.i1]);
        }
      }
    }
    return o;
  });
  const Shape in_shape = x.shape();
  return record(out, "resize_bilinear", {x}, [in_shape, th, tw, P, H, W, out_h, out_w](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(g.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      Tensor gx = make_tensor<T>(in_shape);
      auto dst = gx.mutable_data<T>();
      auto src = g.data<T>();
      for (std::int64_t p = 0; p < P; ++p) {
        T* plane = dst.data() + p * H * W;
        const T* gp = src.data() + p * out_h * out_w;
        for (std::int64_t oh = 0; oh < out_h; ++oh) {
          const auto& lh = (*th)[oh];
          const T a1 = static_cast<T>(lh.w1), a0 = 1 - a1;
          for (std::int64_t ow = 0; ow < out_w; ++ow) {
            const auto& lw = (*tw)[ow];
            const T b1 = static_cast<T>(lw.w1), b0 = 1 - b1;
            const T v = gp[oh * out_w + ow];
            plane[lh.i0 * W + lw.i0] += a0 * b0 * v;
            plane[lh.i0 * W + lw.i1] += a0 * b1 * v;
            plane[lh.i1 * W + lw.i0] += a1 * b0 * v;
            plane[lh.i1 * W + lw.i1] += a1 * b1 * v;
          }
        }
      }
      return {gx};
    });
  });
}

}  // namespace bit
