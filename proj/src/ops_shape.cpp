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

#include <algorithm>
#include <numeric>

#include "bit/ops.hpp"
#include "broadcast.hpp"

namespace bit {

namespace {

int normalize_axis(int axis, std::int64_t rank, const char* op) {
  if (axis < 0) axis += static_cast<int>(rank);
  if (axis < 0 || axis >= rank) throw DimensionError(str_cat(op, ": axis out of range for rank ", rank));
  return axis;
}

std::vector<std::int64_t> contiguous_strides(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError(str_cat("reshape: ", shape_str(x.shape()), " -> ", shape_str(shape)));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->dtype = x.dtype();
  impl->storage = x.impl()->storage;
  const Shape src = x.shape();
  return record(Tensor(std::move(impl)), "reshape", {x},
                [src](const Tensor& g) -> std::vector<Tensor> { return {reshape(g, src)}; });
}

Tensor permute(const Tensor& x, const std::vector<int>& axes) {
  const auto r = x.rank();
  if (static_cast<std::int64_t>(axes.size()) != r) throw DimensionError("permute: axes length differs from rank");
  std::vector<int> inverse(axes.size(), -1);
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const int a = normalize_axis(axes[i], r, "permute");
    if (inverse[a] != -1) throw DimensionError("permute: repeated axis");
    inverse[a] = static_cast<int>(i);
  }
  const Shape& in = x.shape();
  Shape out_shape(axes.size());
  const auto in_strides = contiguous_strides(in);
  std::vector<std::int64_t> src_stride(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    out_shape[i] = in[axes[i]];
    src_stride[i] = in_strides[axes[i]];
  }
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(out_shape);
    auto dst = o.mutable_data<T>();
    auto src = x.data<T>();
    if (dst.empty()) return o;
    const std::size_t rr = out_shape.size();
    if (rr == 0) {
      dst[0] = src[0];
      return o;
    }
    std::vector<std::int64_t> idx(rr, 0);
    const std::int64_t inner = out_shape[rr - 1];
    const std::int64_t inner_stride = src_stride[rr - 1];
    const std::int64_t outer = static_cast<std::int64_t>(dst.size()) / inner;
    std::int64_t off = 0, pos = 0;
    for (std::int64_t n = 0; n < outer; ++n) {
      for (std::int64_t j = 0; j < inner; ++j) dst[pos++] = src[off + j * inner_stride];
      for (std::size_t d = rr - 1; d-- > 0;) {
        off += src_stride[d];
        if (++idx[d] < out_shape[d]) break;
        off -= src_stride[d] * out_shape[d];
        idx[d] = 0;
      }
    }
    return o;
  });
  return record(out, "permute", {x}, [inverse](const Tensor& g) -> std::vector<Tensor> { return {permute(g, inverse)}; });
}

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  std::vector<int> axes(static_cast<std::size_t>(x.rank()));
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[normalize_axis(axis0, x.rank(), "transpose")], axes[normalize_axis(axis1, x.rank(), "transpose")]);
  return permute(x, axes);
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const auto r = parts[0].rank();
  axis = normalize_axis(axis, r, "concat");
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    detail::check_same_dtype(parts[0], p, "concat");
    if (p.rank() != r) throw DimensionError("concat: rank mismatch");
    for (std::int64_t d = 0; d < r; ++d) {
      if (d != axis && p.shape()[d] != parts[0].shape()[d]) {
        throw DimensionError(str_cat("concat: shapes ", shape_str(parts[0].shape()), " and ", shape_str(p.shape()),
                                     " differ off axis ", axis));
      }
    }
    out_shape[axis] += p.shape()[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[d];
  for (auto d = axis + 1; d < r; ++d) inner *= out_shape[d];
  Tensor out = dispatch(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(out_shape);
    auto dst = o.mutable_data<T>();
    const std::int64_t out_row = out_shape[axis] * inner;
    std::int64_t col = 0;
    for (const auto& p : parts) {
      auto src = p.data<T>();
      const std::int64_t row = p.shape()[axis] * inner;
      for (std::int64_t i = 0; i < outer; ++i) {
        std::copy_n(src.begin() + i * row, row, dst.begin() + i * out_row + col);
      }
      col += row;
    }
    return o;
  });
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<std::int64_t> extents;
  for (const auto& p : parts) extents.push_back(p.shape()[axis]);
  return record(out, "concat", inputs, [extents, axis](const Tensor& g) -> std::vector<Tensor> {
    std::vector<Tensor> grads;
    std::int64_t start = 0;
    for (auto e : extents) {
      grads.push_back(slice(g, axis, start, e));
      start += e;
    }
    return grads;
  });
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length) {
  const auto r = x.rank();
  axis = normalize_axis(axis, r, "slice");
  const Shape& in = x.shape();
  if (start < 0 || length < 0 || start + length > in[axis]) {
    throw RangeError(str_cat("slice [", start, ", ", start + length, ") out of range for extent ", in[axis]));
  }
  Shape out_shape = in;
  out_shape[axis] = length;
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= in[d];
  for (auto d = axis + 1; d < r; ++d) inner *= in[d];
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(out_shape);
    auto dst = o.mutable_data<T>();
    auto src = x.data<T>();
    const std::int64_t row = length * inner;
    for (std::int64_t i = 0; i < outer; ++i) {
      std::copy_n(src.begin() + (i * in[axis] + start) * inner, row, dst.begin() + i * row);
    }
    return o;
  });
  return record(out, "slice", {x}, [in, axis, start, length, outer, inner](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(g.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      Tensor gx = make_tensor<T>(in);
      auto dst = gx.mutable_data<T>();
      auto src = g.data<T>();
      const std::int64_t row = length * inner;
      for (std::int64_t i = 0; i < outer; ++i) {
        std::copy_n(src.begin() + i * row, row, dst.begin() + (i * in[axis] + start) * inner);
      }
      return {gx};
    });
  });
}

Tensor gather(const Tensor& x, const Shape& out_shape, IndexMap index) {
  if (!index || static_cast<std::int64_t>(index->size()) != shape_numel(out_shape)) {
    throw DimensionError("gather: index map size does not match output shape " + shape_str(out_shape));
  }
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = make_tensor<T>(out_shape);
    auto dst = o.mutable_data<T>();
    auto src = x.data<T>();
    const auto& idx = *index;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[idx[i]];
    return o;
  });
  const Shape in = x.shape();
  return record(out, "gather", {x}, [in, index](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(g.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      Tensor gx = make_tensor<T>(in);
      auto dst = gx.mutable_data<T>();
      auto src = g.data<T>();
      const auto& idx = *index;
      for (std::size_t i = 0; i < src.size(); ++i) dst[idx[i]] += src[i];
      return {gx};
    });
  });
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n <= 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Tensor pad_reflect_br(const Tensor& x, std::int64_t pad_h, std::int64_t pad_w) {
  if (x.rank() != 4) throw DimensionError("pad_reflect_br expects [B,C,H,W], got " + shape_str(x.shape()));
  if (pad_h == 0 && pad_w == 0) return x;
  const auto B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto Hp = H + pad_h, Wp = W + pad_w;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(B * C * Hp * Wp));
  for (std::int64_t p = 0; p < B * C; ++p) {
    for (std::int64_t h = 0; h < Hp; ++h) {
      const auto sh = reflect_index(h, H);
      for (std::int64_t w = 0; w < Wp; ++w) idx->push_back((p * H + sh) * W + reflect_index(w, W));
    }
  }
  return gather(x, {B, C, Hp, Wp}, std::move(idx));
}

Tensor crop_tl(const Tensor& x, std::int64_t h, std::int64_t w) {
  if (x.rank() != 4 || h > x.dim(2) || w > x.dim(3)) {
    throw DimensionError(str_cat("crop_tl ", h, "x", w, " from ", shape_str(x.shape())));
  }
  if (h == x.dim(2) && w == x.dim(3)) return x;
  return slice(slice(x, 2, 0, h), 3, 0, w);
}

namespace {

IndexMap shuffle_index(std::int64_t B, std::int64_t C, std::int64_t H, std::int64_t W, int r) {
  // Output [B, C, H r, W r] gathers from input [B, C r^2, H, W].
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(B * C * H * W * r * r));
  const std::int64_t Cin = C * r * r;
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t c = 0; c < C; ++c) {
      for (std::int64_t oh = 0; oh < H * r; ++oh) {
        for (std::int64_t ow = 0; ow < W * r; ++ow) {
          const std::int64_t ci = c * r * r + (oh % r) * r + (ow % r);
          idx->push_back(((b * Cin + ci) * H + oh / r) * W + ow / r);
        }
      }
    }
  }
  return idx;
}

}  // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
  if (x.rank() != 4 || r < 1) throw DimensionError("pixel_shuffle expects [B,C,H,W] and r >= 1");
  const auto B = x.dim(0), Cr = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (Cr % (r * r) != 0) throw DimensionError(str_cat("pixel_shuffle: ", Cr, " channels not divisible by r^2 = ", r * r));
  if (r == 1) return x;
  const auto C = Cr / (r * r);
  return gather(x, {B, C, H * r, W * r}, shuffle_index(B, C, H, W, r));
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  if (x.rank() != 4 || r < 1) throw DimensionError("pixel_unshuffle expects [B,C,H,W] and r >= 1");
  const auto B = x.dim(0), C = x.dim(1), Hr = x.dim(2), Wr = x.dim(3);
  if (Hr % r != 0 || Wr % r != 0) throw DimensionError(str_cat("pixel_unshuffle: spatial extents not divisible by ", r));
  if (r == 1) return x;
  const auto H = Hr / r, W = Wr / r;
  const auto fwd = shuffle_index(B, C, H, W, r);
  auto inv = std::make_shared<std::vector<std::int64_t>>(fwd->size());
  for (std::size_t i = 0; i < fwd->size(); ++i) (*inv)[(*fwd)[i]] = static_cast<std::int64_t>(i);
  return gather(x, {B, C * r * r, H, W}, std::move(inv));
}

}  // namespace bit
