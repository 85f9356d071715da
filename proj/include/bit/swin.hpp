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

// Window multi-head self-attention, Swin transformer blocks (STB) and the
// residual Swin transformer block (RSTB).
//
// Feature maps whose extents are not multiples of the window are reflect-padded
// on the bottom/right before partitioning and cropped afterwards. Shifted
// windows use a cyclic roll by -shift and an additive -1e9 mask between tokens
// that came from different regions of the unrolled map.
#pragma once

#include <vector>

#include "bit/layers.hpp"

namespace bit {

inline constexpr double kMaskValue = -1e9;

struct WindowConfig {
  int window = 8;
  int shift = 0;

  /// Throws DimensionError unless window >= 1 and shift is 0 or window / 2.
  void validate() const;
  int tokens() const { return window * window; }
};

struct AttentionParams {
  Linear q, k, v;
  Linear proj;
  /// [(2M-1)^2, heads], zero-initialised.
  Tensor rel_bias_table;
  int heads = 1;
  int window = 1;
  /// M^2 x M^2 table offsets, row-major over (query, key).
  std::shared_ptr<const std::vector<std::int64_t>> rel_index;

  AttentionParams() = default;
  AttentionParams(std::int64_t channels, int heads, int window, DType dtype, Rng& rng);
  std::int64_t channels() const { return q.weight.dim(0); }
  std::int64_t head_dim() const { return channels() / heads; }
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Relative position index for an M x M window, shape M^2 x M^2.
std::vector<std::int64_t> relative_position_index(int window);

/// Bias B gathered from the table: [heads, M^2, M^2].
Tensor relative_position_bias(const AttentionParams& params);

/// Additive mask [nW, M^2, M^2] for the rolled, padded map of size Hp x Wp.
Tensor shift_attention_mask(std::int64_t hp, std::int64_t wp, int window, int shift, DType dtype);

/// [B, C, H, W] -> [B * HW / M^2, M^2, C]; H and W must be multiples of M.
Tensor window_partition(const Tensor& x, int window);
/// Exact inverse of window_partition.
Tensor window_reverse(const Tensor& windows, int window, std::int64_t batch, std::int64_t height, std::int64_t width);

/// Attention within each window of tokens [n_win, M^2, C]. `mask`, when
/// defined, is [nW, M^2, M^2] and n_win must be a multiple of nW.
Tensor wmsa(const Tensor& tokens, const AttentionParams& params, const Tensor& mask = Tensor());

/// Windowed attention over x [B, C, H, W] for cfg.shift in {0, M/2}.
Tensor window_attention(const Tensor& x, const AttentionParams& params, const WindowConfig& cfg);
/// As window_attention, requiring cfg.shift == M/2.
Tensor shifted_wmsa(const Tensor& x, const AttentionParams& params, const WindowConfig& cfg);

struct StbParams {
  LayerNorm norm1;
  AttentionParams attn;
  LayerNorm norm2;
  Linear fc1, fc2;
  WindowConfig cfg;

  StbParams() = default;
  StbParams(std::int64_t channels, int heads, WindowConfig cfg, double mlp_ratio, DType dtype, Rng& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

/// x = x + MSA(LN(x)); x = x + MLP(LN(x)) on x [B, C, H, W].
Tensor stb_forward(const Tensor& x, const StbParams& params);
/// Same block on channel-last tokens [B, H, W, C].
Tensor stb_forward_cl(const Tensor& x, const StbParams& params);

struct RstbParams {
  std::vector<StbParams> blocks;
  Conv2d conv;

  RstbParams() = default;
  /// `depth` blocks alternating shift 0 / M/2, then a 3x3 conv.
  RstbParams(std::int64_t channels, int heads, int window, double mlp_ratio, DType dtype, Rng& rng, int depth = 6);
  void collect(const std::string& prefix, ParamList& out) const;
};

/// conv(STB_6(...STB_1(x))) + x; output shape equals input shape.
Tensor rstb_forward(const Tensor& x, const RstbParams& params);

}  // namespace bit
