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

#include <cmath>

#include "bit/swin.hpp"
#include "doctest.h"
#include "unit/attention_oracle.hpp"
#include "unit/gradcheck.hpp"

using namespace bit;
using bit::testing::random_tensor;

namespace {

AttentionParams random_attention(std::int64_t C, int heads, int M, std::uint64_t seed) {
  Rng rng(seed);
  AttentionParams p(C, heads, M, DType::f64, rng);
  // Larger-than-default weights and a non-zero bias table exercise every term.
  for (Tensor* t : {&p.q.weight, &p.k.weight, &p.v.weight, &p.proj.weight, &p.q.bias, &p.k.bias, &p.v.bias,
                    &p.proj.bias, &p.rel_bias_table}) {
    Tensor r = random_tensor(t->shape(), seed++, DType::f64, -0.5, 0.5);
    assign_values(*t, r);
  }
  return p;
}

}  // namespace

TEST_CASE("window config validation") {
  CHECK_NOTHROW((WindowConfig{8, 0}.validate()));
  CHECK_NOTHROW((WindowConfig{8, 4}.validate()));
  CHECK_NOTHROW((WindowConfig{5, 2}.validate()));
  CHECK_THROWS_AS((WindowConfig{8, 3}.validate()), DimensionError);
  CHECK_THROWS_AS((WindowConfig{0, 0}.validate()), DimensionError);
}

TEST_CASE("window_partition examples") {
  Tensor x = random_tensor({1, 3, 16, 16}, 1);
  Tensor w = window_partition(x, 8);
  CHECK(w.shape() == Shape{4, 64, 3});

  Tensor y = random_tensor({1, 2, 4, 4}, 2);
  Tensor single = window_partition(y, 4);
  REQUIRE(single.shape() == Shape{1, 16, 2});
  const auto yv = y.to_vector(), sv = single.to_vector();
  for (int t = 0; t < 16; ++t)
    for (int c = 0; c < 2; ++c) CHECK(sv[t * 2 + c] == yv[c * 16 + t]);

  CHECK_THROWS_AS(window_partition(random_tensor({1, 1, 10, 8}, 3), 4), DimensionError);
}

TEST_CASE("window_partition roundtrip is bit exact") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 1 + static_cast<int>(rng() % 5);
    const auto B = 1 + static_cast<std::int64_t>(rng() % 2), C = 1 + static_cast<std::int64_t>(rng() % 4);
    const auto H = M * (1 + static_cast<std::int64_t>(rng() % 3)), W = M * (1 + static_cast<std::int64_t>(rng() % 3));
    Tensor x = random_tensor({B, C, H, W}, 100 + trial, DType::f32);
    CHECK(window_reverse(window_partition(x, M), M, B, H, W).to_vector() == x.to_vector());
  }
}

TEST_CASE("relative position index covers the table") {
  auto idx = relative_position_index(4);
  CHECK(idx.size() == 256);
  CHECK(*std::max_element(idx.begin(), idx.end()) == 48);
  CHECK(*std::min_element(idx.begin(), idx.end()) == 0);
  CHECK(idx[0] == 24);  // zero offset sits at the table centre
}

TEST_CASE("wmsa with a single token returns proj(V)") {
  AttentionParams p = random_attention(6, 2, 1, 10);
  Tensor tok = random_tensor({3, 1, 6}, 11);
  Tensor out = wmsa(tok, p);
  Tensor expect = p.proj(p.v(tok));
  CHECK(max_abs_diff(out, expect) < 1e-12);
}

TEST_CASE("wmsa with zero queries and zero bias averages V") {
  AttentionParams p = random_attention(6, 3, 2, 12);
  zero_fill(p.q.weight);
  zero_fill(p.q.bias);
  zero_fill(p.rel_bias_table);
  Tensor tok = random_tensor({2, 4, 6}, 13);
  Tensor v = p.v(tok);
  Tensor mean_v = scale(reduce_to(v, {2, 1, 6}), 0.25);
  Tensor expect = p.proj(add(Tensor::zeros({2, 4, 6}, DType::f64), mean_v));
  CHECK(max_abs_diff(wmsa(tok, p), expect) < 1e-12);
}

TEST_CASE("wmsa matches direct formula evaluation on a 2x2 window") {
  AttentionParams p = random_attention(4, 2, 2, 14);
  Tensor x = random_tensor({1, 4, 2, 2}, 15);
  Tensor got = window_attention(x, p, {2, 0});
  auto expect = bit::testing::brute_force_window_attention(x, p, 0);
  const auto gv = got.to_vector();
  double err = 0;
  for (std::size_t i = 0; i < gv.size(); ++i) err = std::max(err, std::abs(gv[i] - expect[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("wmsa rejects mismatched masks") {
  AttentionParams p = random_attention(4, 2, 2, 16);
  Tensor tok = random_tensor({3, 4, 4}, 17);
  CHECK_THROWS_AS(wmsa(tok, p, Tensor::zeros({2, 4, 4}, DType::f64)), DimensionError);
  CHECK_THROWS_AS(wmsa(random_tensor({3, 9, 4}, 1), p), DimensionError);
}

TEST_CASE("shifted attention matches pairwise enumeration on 8x8 with M=4") {
  AttentionParams p = random_attention(6, 2, 4, 18);
  Tensor x = random_tensor({1, 6, 8, 8}, 19);
  for (int shift : {0, 2}) {
    Tensor got = window_attention(x, p, {4, shift});
    auto expect = bit::testing::brute_force_window_attention(x, p, shift);
    const auto gv = got.to_vector();
    double err = 0;
    for (std::size_t i = 0; i < gv.size(); ++i) err = std::max(err, std::abs(gv[i] - expect[i]));
    CHECK(err < 1e-6);
  }
  CHECK_THROWS_AS(shifted_wmsa(x, p, {4, 0}), DimensionError);
}

TEST_CASE("shift mask blocks cross-region pairs") {
  Tensor m = shift_attention_mask(8, 8, 4, 2, DType::f64);
  REQUIRE(m.shape() == Shape{4, 16, 16});
  const auto v = m.to_vector();
  // Window 0 never wraps; the last window mixes four regions.
  for (int i = 0; i < 256; ++i) CHECK(v[i] == 0.0);
  int masked = 0;
  for (int i = 0; i < 256; ++i) masked += v[3 * 256 + i] != 0.0;
  CHECK(masked == 256 - 4 * 16);

  // After softmax the masked weights vanish and rows still sum to one.
  Tensor logits = add(random_tensor({4, 16, 16}, 20), m);
  auto a = softmax(logits, -1).to_vector();
  for (int w = 0; w < 4; ++w)
    for (int r = 0; r < 16; ++r) {
      double s = 0;
      for (int c = 0; c < 16; ++c) {
        const auto i = (w * 16 + r) * 16 + c;
        s += a[i];
        if (v[i] != 0.0) CHECK(a[i] < 1e-8);
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
}

TEST_CASE("shift then unshift with identity attention is lossless") {
  // Zeroed attention makes the STB an identity, so shifted windows plus padding
  // must reassemble the input exactly.
  Rng rng(21);
  StbParams blk(6, 2, {4, 2}, 2.0, DType::f64, rng);
  zero_fill(blk.attn.proj.weight);
  zero_fill(blk.attn.proj.bias);
  zero_fill(blk.fc2.weight);
  zero_fill(blk.fc2.bias);
  Tensor x = random_tensor({2, 6, 10, 7}, 22);
  CHECK(stb_forward(x, blk).to_vector() == x.to_vector());
}

TEST_CASE("constant input gives constant attention output") {
  AttentionParams p = random_attention(4, 2, 4, 23);
  std::vector<double> col{0.3, -0.2, 0.7, 0.1};
  std::vector<double> v;
  for (double c : col) v.insert(v.end(), 64, c);
  Tensor x = Tensor::from_vector({1, 4, 8, 8}, v, DType::f64);
  Tensor out = window_attention(x, p, {4, 2});
  // Averaging identical tokens returns proj(V(token)).
  Tensor tok = Tensor::from_vector({1, 1, 4}, col, DType::f64);
  const auto expect = p.proj(p.v(tok)).to_vector();
  const auto o = out.to_vector();
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 64; ++i) CHECK(o[c * 64 + i] == doctest::Approx(expect[c]).epsilon(1e-10));
}

TEST_CASE("non-shifted attention is independent per window") {
  AttentionParams p = random_attention(4, 2, 2, 24);
  zero_fill(p.rel_bias_table);
  Tensor tok = random_tensor({5, 4, 4}, 25);
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<Tensor> rows;
  for (int i : perm) rows.push_back(slice(tok, 0, i, 1));
  Tensor permuted = concat(rows, 0);
  Tensor a = wmsa(tok, p), b = wmsa(permuted, p);
  for (int n = 0; n < 5; ++n) CHECK(slice(b, 0, n, 1).to_vector() == slice(a, 0, perm[n], 1).to_vector());
}

TEST_CASE("stb examples") {
  Rng rng(26);
  StbParams blk(6, 3, {4, 0}, 2.0, DType::f64, rng);
  for (auto shape : {Shape{1, 6, 8, 8}, Shape{2, 6, 4, 12}, Shape{1, 6, 16, 8}}) {
    CHECK(stb_forward(random_tensor(shape, 27), blk).shape() == shape);
  }
  zero_fill(blk.attn.proj.weight);
  zero_fill(blk.attn.proj.bias);
  zero_fill(blk.fc2.weight);
  zero_fill(blk.fc2.bias);
  Tensor x = random_tensor({1, 6, 8, 8}, 28);
  CHECK(stb_forward(x, blk).to_vector() == x.to_vector());
}

TEST_CASE("stb gradient matches finite differences") {
  Rng rng(29);
  StbParams blk(4, 2, {2, 1}, 2.0, DType::f64, rng);
  for (Tensor* t : {&blk.attn.q.weight, &blk.attn.k.weight, &blk.attn.rel_bias_table, &blk.fc1.weight}) {
    assign_values(*t, random_tensor(t->shape(), 30, DType::f64, -0.5, 0.5));
  }
  Tensor x = random_tensor({1, 4, 4, 4}, 31);
  std::vector<Tensor> in{x, blk.attn.q.weight, blk.attn.k.weight, blk.attn.v.weight, blk.attn.rel_bias_table,
                         blk.norm1.gamma, blk.fc1.weight, blk.fc2.bias};
  auto r = bit::testing::grad_check(
      [&](const std::vector<Tensor>&) { return bit::testing::weighted_sum(stb_forward(x, blk)); }, in);
  CHECK(r.max_rel < 1e-4);
}

namespace {

// Closed-form parameter counts, written from the block structure.
std::int64_t stb_count(std::int64_t C, std::int64_t h, std::int64_t M, std::int64_t rho) {
  const std::int64_t ln = 2 * C;
  const std::int64_t qkv = 3 * (C * C + C);
  const std::int64_t proj = C * C + C;
  const std::int64_t table = (2 * M - 1) * (2 * M - 1) * h;
  const std::int64_t mlp = (C * rho * C + rho * C) + (rho * C * C + C);
  return 2 * ln + qkv + proj + table + mlp;
}

std::int64_t rstb_count(std::int64_t C, std::int64_t h, std::int64_t M, std::int64_t rho) {
  return 6 * stb_count(C, h, M, rho) + 9 * C * C + C;
}

}  // namespace

TEST_CASE("rstb examples") {
  Rng rng(32);
  RstbParams blk(8, 2, 8, 2.0, DType::f32, rng);
  Tensor x = random_tensor({1, 8, 24, 40}, 33, DType::f32);
  CHECK(rstb_forward(x, blk).shape() == x.shape());
  Tensor y = random_tensor({1, 8, 20, 13}, 34, DType::f32);
  CHECK(rstb_forward(y, blk).shape() == y.shape());

  for (auto& s : blk.blocks) {
    zero_fill(s.attn.proj.weight);
    zero_fill(s.attn.proj.bias);
    zero_fill(s.fc2.weight);
    zero_fill(s.fc2.bias);
  }
  zero_fill(blk.conv.weight);
  zero_fill(blk.conv.bias);
  CHECK(rstb_forward(x, blk).to_vector() == x.to_vector());

  for (std::size_t j = 0; j < blk.blocks.size(); ++j) CHECK(blk.blocks[j].cfg.shift == (j % 2 ? 4 : 0));
}

TEST_CASE("rstb parameter count matches the closed form") {
  Rng rng(35);
  RstbParams paper(174, 6, 8, 2.0, DType::f32, rng);
  ParamList pl;
  paper.collect("rstb0", pl);
  CHECK(count_scalars(pl) == rstb_count(174, 6, 8, 2));
  CHECK(pl.front().name == "rstb0.stb0.norm1.gamma");
  RstbParams tiny(24, 3, 4, 2.0, DType::f32, rng);
  ParamList tl;
  tiny.collect("rstb0", tl);
  CHECK(count_scalars(tl) == rstb_count(24, 3, 4, 2));
}
