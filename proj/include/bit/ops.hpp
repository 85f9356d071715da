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

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bit/tensor.hpp"

// Differentiable tensor operations. Every function records its backward rule
// when recording is enabled and an input requires grad. Operands must share a
// dtype; binary elementwise ops broadcast with NumPy semantics.
namespace bit {

Shape broadcast_shapes(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
/// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)).
Tensor gelu(const Tensor& x);
/// Gradient passes where lo < x < hi.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sums `x` over broadcast axes so the result has `shape`.
Tensor reduce_to(const Tensor& x, const Shape& shape);
/// Mean absolute error over all elements.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

/// [.., m, k] x [.., k, n] -> [.., m, n]; batch prefixes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[.., in] * weight[in, out] + bias[out]. `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor reshape(const Tensor& x, const Shape& shape);
Tensor permute(const Tensor& x, const std::vector<int>& axes);
Tensor transpose(const Tensor& x, int axis0, int axis1);
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length);

using IndexMap = std::shared_ptr<const std::vector<std::int64_t>>;
/// out.flat[i] = x.flat[index[i]]; backward scatter-adds. Indices may repeat.
Tensor gather(const Tensor& x, const Shape& out_shape, IndexMap index);

Tensor softmax(const Tensor& x, int axis);
/// Normalises over the last axis, then applies gamma/beta of that extent.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

enum class PadMode { zeros, reflect };

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  PadMode pad_mode = PadMode::zeros;
};

/// Cross-correlation of x[B,C,H,W] with w[O,C,kh,kw] (odd kernels), plus bias[O].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& opts = {});

/// Bilinear resampling with half-pixel centres (align_corners = false).
Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

/// [B, C r^2, H, W] -> [B, C, H r, W r].
Tensor pixel_shuffle(const Tensor& x, int r);
/// [B, C, H r, W r] -> [B, C r^2, H, W].
Tensor pixel_unshuffle(const Tensor& x, int r);

/// Mirror index without edge repetition, folded for any offset.
std::int64_t reflect_index(std::int64_t i, std::int64_t n);
/// Reflect-pads the two spatial axes of x[B,C,H,W] on the bottom/right.
Tensor pad_reflect_br(const Tensor& x, std::int64_t pad_h, std::int64_t pad_w);
/// Crops x[B,C,H,W] to the top-left h x w region.
Tensor crop_tl(const Tensor& x, std::int64_t h, std::int64_t w);

bool all_finite(const Tensor& x);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace bit
