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

#include "bit/swin.hpp"

#include <array>
#include <cmath>
#include <map>

namespace bit {

void WindowConfig::validate() const {
  if (window < 1) throw DimensionError(str_cat("window size must be >= 1, got ", window));
  if (shift != 0 && shift != window / 2) {
    throw DimensionError(str_cat("shift must be 0 or ", window / 2, " for window ", window, ", got ", shift));
  }
}

std::vector<std::int64_t> relative_position_index(int window) {
  const int M = window;
  const int T = M * M;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(T) * T);
  for (int a = 0; a < T; ++a) {
    for (int b = 0; b < T; ++b) {
      const int dh = a / M - b / M + (M - 1);
      const int dw = a % M - b % M + (M - 1);
      idx[static_cast<std::size_t>(a) * T + b] = static_cast<std::int64_t>(dh) * (2 * M - 1) + dw;
    }
  }
  return idx;
}

AttentionParams::AttentionParams(std::int64_t channels, int heads_, int window_, DType dtype, Rng& rng)
    : q(channels, channels, dtype, rng),
      k(channels, channels, dtype, rng),
      v(channels, channels, dtype, rng),
      proj(channels, channels, dtype, rng),
      rel_bias_table(constant_param({static_cast<std::int64_t>(2 * window_ - 1) * (2 * window_ - 1), heads_}, 0.0, dtype)),
      heads(heads_),
      window(window_),
      rel_index(std::make_shared<const std::vector<std::int64_t>>(relative_position_index(window_))) {
  if (heads_ < 1 || channels % heads_ != 0) {
    throw DimensionError(str_cat("channels ", channels, " not divisible by heads ", heads_));
  }
}

void AttentionParams::collect(const std::string& prefix, ParamList& out) const {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  proj.collect(prefix + ".proj", out);
  out.push_back({prefix + ".rel_bias", rel_bias_table});
}

Tensor relative_position_bias(const AttentionParams& p) {
  const std::int64_t T = static_cast<std::int64_t>(p.window) * p.window;
  const std::int64_t h = p.heads;
  auto idx = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(h * T * T));
  for (std::int64_t head = 0; head < h; ++head) {
    for (std::int64_t ab = 0; ab < T * T; ++ab) (*idx)[head * T * T + ab] = (*p.rel_index)[ab] * h + head;
  }
  return gather(p.rel_bias_table, {h, T, T}, std::move(idx));
}

namespace {

std::int64_t round_up(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

int region_of(std::int64_t p, std::int64_t padded, int window, int shift) {
  if (p < padded - window) return 0;
  if (p < padded - shift) return 1;
  return 2;
}

using MapKey = std::array<std::int64_t, 8>;

// Index maps are cached per geometry; they depend only on integer extents.
IndexMap cached(const MapKey& key, const std::function<IndexMap()>& build) {
  thread_local std::map<MapKey, IndexMap> cache;
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto m = build();
  cache.emplace(key, m);
  return m;
}

// Channel-last [B, H, W, C] -> windows [B * nW, M^2, C] with reflect padding and roll.
IndexMap partition_map(std::int64_t B, std::int64_t H, std::int64_t W, std::int64_t C, int M, int shift) {
  return cached({0, B, H, W, C, M, shift, 0}, [=] {
    const auto Hp = round_up(H, M), Wp = round_up(W, M);
    const auto nh = Hp / M, nw = Wp / M;
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    idx->reserve(static_cast<std::size_t>(B * Hp * Wp * C));
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t wh = 0; wh < nh; ++wh)
        for (std::int64_t ww = 0; ww < nw; ++ww)
          for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
              const auto sh = reflect_index((wh * M + i + shift) % Hp, H);
              const auto sw = reflect_index((ww * M + j + shift) % Wp, W);
              const auto base = ((b * H + sh) * W + sw) * C;
              for (std::int64_t c = 0; c < C; ++c) idx->push_back(base + c);
            }
    return IndexMap(std::move(idx));
  });
}

// Windows [B * nW, M^2, C] -> channel-last [B, H, W, C], undoing roll and padding.
IndexMap reverse_map(std::int64_t B, std::int64_t H, std::int64_t W, std::int64_t C, int M, int shift) {
  return cached({1, B, H, W, C, M, shift, 0}, [=] {
    const auto Hp = round_up(H, M), Wp = round_up(W, M);
    const auto nh = Hp / M, nw = Wp / M;
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    idx->reserve(static_cast<std::size_t>(B * H * W * C));
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < W; ++w) {
          const auto ph = (h - shift + Hp) % Hp, pw = (w - shift + Wp) % Wp;
          const auto win = (b * nh + ph / M) * nw + pw / M;
          const auto tok = (ph % M) * M + pw % M;
          const auto base = (win * M * M + tok) * C;
          for (std::int64_t c = 0; c < C; ++c) idx->push_back(base + c);
        }
    return IndexMap(std::move(idx));
  });
}

}  // namespace

Tensor shift_attention_mask(std::int64_t hp, std::int64_t wp, int window, int shift, DType dtype) {
  const int M = window;
  if (hp % M != 0 || wp % M != 0) throw DimensionError("shift_attention_mask: padded extents must be multiples of M");
  const auto nh = hp / M, nw = wp / M;
  const std::int64_t T = static_cast<std::int64_t>(M) * M;
  std::vector<double> m(static_cast<std::size_t>(nh * nw * T * T), 0.0);
  std::vector<int> label(static_cast<std::size_t>(T));
  for (std::int64_t wh = 0; wh < nh; ++wh) {
    for (std::int64_t ww = 0; ww < nw; ++ww) {
      for (int t = 0; t < T; ++t) {
        label[t] = 3 * region_of(wh * M + t / M, hp, M, shift) + region_of(ww * M + t % M, wp, M, shift);
      }
      double* dst = m.data() + (wh * nw + ww) * T * T;
      for (int a = 0; a < T; ++a)
        for (int b = 0; b < T; ++b) dst[a * T + b] = label[a] == label[b] ? 0.0 : kMaskValue;
    }
  }
  return Tensor::from_vector({nh * nw, T, T}, m, dtype);
}

Tensor window_partition(const Tensor& x, int window) {
  if (x.rank() != 4) throw DimensionError("window_partition expects [B,C,H,W], got " + shape_str(x.shape()));
  const auto B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (window < 1 || H % window != 0 || W % window != 0) {
    throw DimensionError(str_cat("window_partition: ", H, "x", W, " not divisible by window ", window));
  }
  Tensor cl = permute(x, {0, 2, 3, 1});
  const std::int64_t n = B * (H / window) * (W / window);
  return gather(cl, {n, static_cast<std::int64_t>(window) * window, C}, partition_map(B, H, W, C, window, 0));
}

Tensor window_reverse(const Tensor& windows, int window, std::int64_t B, std::int64_t H, std::int64_t W) {
  if (windows.rank() != 3 || window < 1 || H % window != 0 || W % window != 0 ||
      windows.dim(0) != B * (H / window) * (W / window) || windows.dim(1) != static_cast<std::int64_t>(window) * window) {
    throw DimensionError(str_cat("window_reverse: windows ", shape_str(windows.shape()), " do not tile ", B, "x", H, "x",
                                 W, " with window ", window));
  }
  const auto C = windows.dim(2);
  Tensor cl = gather(windows, {B, H, W, C}, reverse_map(B, H, W, C, window, 0));
  return permute(cl, {0, 3, 1, 2});
}

Tensor wmsa(const Tensor& tokens, const AttentionParams& p, const Tensor& mask) {
  if (tokens.rank() != 3) throw DimensionError("wmsa expects tokens [n_win, M^2, C], got " + shape_str(tokens.shape()));
  const auto N = tokens.dim(0), T = tokens.dim(1), C = tokens.dim(2);
  const std::int64_t h = p.heads, d = p.head_dim();
  if (C != p.channels()) throw DimensionError(str_cat("wmsa: tokens have ", C, " channels, params expect ", p.channels()));
  if (T != static_cast<std::int64_t>(p.window) * p.window) {
    throw DimensionError(str_cat("wmsa: ", T, " tokens per window, params built for window ", p.window));
  }
  Tensor q = permute(reshape(p.q(tokens), {N, T, h, d}), {0, 2, 1, 3});
  Tensor k = permute(reshape(p.k(tokens), {N, T, h, d}), {0, 2, 3, 1});
  Tensor v = permute(reshape(p.v(tokens), {N, T, h, d}), {0, 2, 1, 3});
  Tensor scores = matmul(scale(q, 1.0 / std::sqrt(static_cast<double>(d))), k);  // [N, h, T, T]
  scores = add(scores, relative_position_bias(p));
  if (mask.defined()) {
    const auto nW = mask.dim(0);
    if (mask.rank() != 3 || mask.dim(1) != T || mask.dim(2) != T || N % nW != 0) {
      throw DimensionError(str_cat("wmsa: mask ", shape_str(mask.shape()), " incompatible with ", N, " windows of ", T,
                                   " tokens"));
    }
    scores = reshape(add(reshape(scores, {N / nW, nW, h, T, T}), reshape(mask, {nW, 1, T, T})), {N, h, T, T});
  }
  Tensor attn = softmax(scores, -1);
  Tensor out = permute(matmul(attn, v), {0, 2, 1, 3});  // [N, T, h, d]
  return p.proj(reshape(out, {N, T, C}));
}

namespace {

Tensor window_attention_cl(const Tensor& x, const AttentionParams& p, int shift) {
  const auto B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const int M = p.window;
  const auto Hp = round_up(H, M), Wp = round_up(W, M);
  const auto nW = (Hp / M) * (Wp / M);
  const std::int64_t T = static_cast<std::int64_t>(M) * M;
  Tensor win = gather(x, {B * nW, T, C}, partition_map(B, H, W, C, M, shift));
  Tensor mask;
  if (shift > 0) mask = shift_attention_mask(Hp, Wp, M, shift, x.dtype());
  Tensor out = wmsa(win, p, mask);
  return gather(out, {B, H, W, C}, reverse_map(B, H, W, C, M, shift));
}

}  // namespace

Tensor window_attention(const Tensor& x, const AttentionParams& p, const WindowConfig& cfg) {
  cfg.validate();
  if (x.rank() != 4) throw DimensionError("window_attention expects [B,C,H,W], got " + shape_str(x.shape()));
  if (cfg.window != p.window) throw DimensionError("window_attention: config window differs from parameter window");
  Tensor cl = permute(x, {0, 2, 3, 1});
  return permute(window_attention_cl(cl, p, cfg.shift), {0, 3, 1, 2});
}

Tensor shifted_wmsa(const Tensor& x, const AttentionParams& p, const WindowConfig& cfg) {
  if (cfg.shift != cfg.window / 2 || cfg.shift == 0) {
    throw DimensionError(str_cat("shifted_wmsa requires shift = ", cfg.window / 2, ", got ", cfg.shift));
  }
  return window_attention(x, p, cfg);
}

StbParams::StbParams(std::int64_t channels, int heads, WindowConfig cfg_, double mlp_ratio, DType dtype, Rng& rng)
    : norm1(channels, dtype),
      attn(channels, heads, cfg_.window, dtype, rng),
      norm2(channels, dtype),
      fc1(channels, static_cast<std::int64_t>(std::llround(channels * mlp_ratio)), dtype, rng),
      fc2(static_cast<std::int64_t>(std::llround(channels * mlp_ratio)), channels, dtype, rng),
      cfg(cfg_) {
  cfg.validate();
}

void StbParams::collect(const std::string& prefix, ParamList& out) const {
  norm1.collect(prefix + ".norm1", out);
  attn.collect(prefix + ".attn", out);
  norm2.collect(prefix + ".norm2", out);
  fc1.collect(prefix + ".mlp.fc1", out);
  fc2.collect(prefix + ".mlp.fc2", out);
}

Tensor stb_forward_cl(const Tensor& x, const StbParams& p) {
  Tensor y = add(x, window_attention_cl(p.norm1(x), p.attn, p.cfg.shift));
  return add(y, p.fc2(gelu(p.fc1(p.norm2(y)))));
}

Tensor stb_forward(const Tensor& x, const StbParams& p) {
  if (x.rank() != 4) throw DimensionError("stb_forward expects [B,C,H,W], got " + shape_str(x.shape()));
  return permute(stb_forward_cl(permute(x, {0, 2, 3, 1}), p), {0, 3, 1, 2});
}

RstbParams::RstbParams(std::int64_t channels, int heads, int window, double mlp_ratio, DType dtype, Rng& rng,
                       int depth) {
  for (int j = 0; j < depth; ++j) {
    blocks.emplace_back(channels, heads, WindowConfig{window, j % 2 == 0 ? 0 : window / 2}, mlp_ratio, dtype, rng);
  }
  conv = Conv2d(channels, channels, 3, 1, dtype, rng);
}

void RstbParams::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t j = 0; j < blocks.size(); ++j) blocks[j].collect(str_cat(prefix, ".stb", j), out);
  conv.collect(prefix + ".conv", out);
}

Tensor rstb_forward(const Tensor& x, const RstbParams& p) {
  if (x.rank() != 4) throw DimensionError("rstb_forward expects [B,C,H,W], got " + shape_str(x.shape()));
  Tensor t = permute(x, {0, 2, 3, 1});
  for (const auto& blk : p.blocks) t = stb_forward_cl(t, blk);
  return add(p.conv(permute(t, {0, 3, 1, 2})), x);
}

}  // namespace bit
