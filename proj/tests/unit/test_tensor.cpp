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
#include <numeric>

#include "doctest.h"
#include "unit/gradcheck.hpp"

using namespace bit;
using bit::testing::grad_check;
using bit::testing::random_tensor;
using bit::testing::weighted_sum;

namespace {
Tensor t64(const Shape& s, std::vector<double> v) { return Tensor::from_vector(s, v, DType::f64); }
}  // namespace

TEST_CASE("tensor invariants") {
  Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(t.data<float>().size() == 24);
  CHECK_THROWS_AS(Tensor::from_vector({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK(Tensor::scalar(3.0).rank() == 0);
  CHECK(Tensor::scalar(3.0).item() == 3.0);
}

TEST_CASE("matmul examples") {
  Tensor eye = t64({2, 2}, {1, 0, 0, 1});
  Tensor b = t64({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, b).to_vector() == std::vector<double>{1, 2, 3, 4});
  CHECK(matmul(t64({1, 2}, {1, 2}), t64({2, 1}, {3, 4})).item() == 11.0);
  try {
    matmul(t64({2, 3}, std::vector<double>(6, 1)), t64({2, 3}, std::vector<double>(6, 1)));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[2, 3]") != std::string::npos);
  }
}

TEST_CASE("matmul batch broadcasting agrees with per-batch products") {
  Tensor a = random_tensor({2, 3, 4, 5}, 1);
  Tensor b = random_tensor({3, 5, 2}, 2);
  Tensor c = matmul(a, b);
  REQUIRE(c.shape() == Shape{2, 3, 4, 2});
  const auto av = a.to_vector(), bv = b.to_vector(), cv = c.to_vector();
  double err = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 2; ++n) {
          double acc = 0;
          for (int k = 0; k < 5; ++k) acc += av[((i * 3 + j) * 4 + m) * 5 + k] * bv[(j * 5 + k) * 2 + n];
          err = std::max(err, std::abs(acc - cv[((i * 3 + j) * 4 + m) * 2 + n]));
        }
  CHECK(err < 1e-12);
}

TEST_CASE("matmul gradient matches finite differences") {
  auto r = grad_check([](const std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); },
                      {random_tensor({3, 3}, 3), random_tensor({3, 3}, 4)});
  CHECK(r.max_rel < 1e-6);
  auto rb = grad_check([](const std::vector<Tensor>& in) { return weighted_sum(matmul(in[0], in[1])); },
                       {random_tensor({2, 1, 3, 4}, 5), random_tensor({3, 4, 2}, 6)});
  CHECK(rb.max_rel < 1e-6);
}

TEST_CASE("softmax examples") {
  auto y = softmax(t64({3}, {0, 0, 0}), 0).to_vector();
  for (double v : y) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  y = softmax(t64({2}, {0, std::log(3.0)}), 0).to_vector();
  CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-14));
  y = softmax(Tensor::from_vector({2}, std::vector<double>{1000, 1000}), 0).to_vector();
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);
}

TEST_CASE("softmax rows sum to one on any axis") {
  Tensor x = random_tensor({3, 5, 4}, 7, DType::f64, -20, 20);
  for (int axis = 0; axis < 3; ++axis) {
    auto y = softmax(x, axis);
    const auto v = y.to_vector();
    for (double e : v) {
      CHECK(e > 0.0);
      CHECK(e <= 1.0);
    }
    Tensor s = reduce_to(y, axis == 0 ? Shape{1, 5, 4} : axis == 1 ? Shape{3, 1, 4} : Shape{3, 5, 1});
    for (double e : s.to_vector()) CHECK(std::abs(e - 1.0) < 1e-6);
  }
  auto r = grad_check([](const std::vector<Tensor>& in) { return weighted_sum(softmax(in[0], 1)); },
                      {random_tensor({2, 4, 3}, 8)});
  CHECK(r.max_rel < 1e-5);
}

TEST_CASE("layer_norm examples and gradient") {
  Tensor one = Tensor::ones({2}, DType::f64), zero = Tensor::zeros({2}, DType::f64);
  for (double v : layer_norm(t64({2, 2}, {5, 5, -1, -1}), one, zero).to_vector()) CHECK(v == 0.0);
  auto y = layer_norm(t64({1, 2}, {1, 3}), one, zero, 1e-15).to_vector();
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-12));
  auto r = grad_check(
      [](const std::vector<Tensor>& in) { return weighted_sum(layer_norm(in[0], in[1], in[2])); },
      {random_tensor({3, 4, 6}, 9), random_tensor({6}, 10), random_tensor({6}, 11)});
  CHECK(r.max_rel < 1e-5);
}

TEST_CASE("conv2d examples") {
  Tensor x = random_tensor({2, 3, 5, 6}, 12);
  Tensor w = Tensor::zeros({3, 3, 1, 1}, DType::f64);
  for (int c = 0; c < 3; ++c) bit::testing::set_element(w, c * 3 + c, 1.0);
  CHECK(max_abs_diff(conv2d(x, w, Tensor()), x) == 0.0);

  Tensor img = Tensor::full({1, 1, 6, 6}, 0.7, DType::f64);
  Tensor avg = Tensor::full({1, 1, 3, 3}, 1.0 / 9, DType::f64);
  // Reflect padding keeps a constant image constant everywhere; zero padding only in the interior.
  auto refl = conv2d(img, avg, Tensor(), {1, 1, PadMode::reflect}).to_vector();
  for (double v : refl) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
  auto zp = conv2d(img, avg, Tensor(), {1, 1, PadMode::zeros});
  CHECK(zp.shape() == Shape{1, 1, 6, 6});
  CHECK(zp.at(2 * 6 + 2) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(zp.at(0) == doctest::Approx(0.7 * 4 / 9).epsilon(1e-12));

  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({2, 4, 3, 3}, DType::f64), Tensor()), DimensionError);
  CHECK(conv2d(Tensor::zeros({1, 3, 8, 8}, DType::f64), Tensor::zeros({4, 3, 3, 3}, DType::f64), Tensor(),
               {2, 1, PadMode::zeros})
            .shape() == Shape{1, 4, 4, 4});
}

TEST_CASE("conv2d gradients") {
  for (auto mode : {PadMode::zeros, PadMode::reflect}) {
    for (int stride : {1, 2}) {
      auto r = grad_check(
          [mode, stride](const std::vector<Tensor>& in) {
            return weighted_sum(conv2d(in[0], in[1], in[2], {stride, 1, mode}));
          },
          {random_tensor({1, 2, 5, 5}, 13), random_tensor({3, 2, 3, 3}, 14), random_tensor({3}, 15)});
      CHECK(r.max_rel < 1e-5);
    }
  }
  auto r1 = grad_check([](const std::vector<Tensor>& in) { return weighted_sum(conv2d(in[0], in[1], in[2])); },
                       {random_tensor({2, 3, 4, 4}, 16), random_tensor({2, 3, 1, 1}, 17), random_tensor({2}, 18)});
  CHECK(r1.max_rel < 1e-5);
}

TEST_CASE("resize_bilinear examples") {
  Tensor x = random_tensor({1, 2, 5, 7}, 19);
  CHECK(max_abs_diff(resize_bilinear(x, 5, 7), x) == 0.0);
  auto up = resize_bilinear(t64({1, 1, 2, 2}, {0, 0, 1, 1}), 4, 4).to_vector();
  for (int h = 0; h < 4; ++h) {
    for (int w = 1; w < 4; ++w) CHECK(up[h * 4 + w] == up[h * 4]);
    if (h > 0) CHECK(up[h * 4] >= up[(h - 1) * 4]);
  }
  Tensor c = Tensor::full({1, 1, 8, 8}, 0.3, DType::f64);
  for (double v : resize_bilinear(resize_bilinear(c, 3, 5), 8, 8).to_vector()) CHECK(v == doctest::Approx(0.3));
  CHECK_THROWS_AS(resize_bilinear(c, 0, 4), DimensionError);
  auto r = grad_check([](const std::vector<Tensor>& in) { return weighted_sum(resize_bilinear(in[0], 7, 3)); },
                      {random_tensor({1, 2, 4, 6}, 20)});
  CHECK(r.max_rel < 1e-5);
}

TEST_CASE("pixel_shuffle examples and roundtrip") {
  Tensor x = t64({1, 4, 1, 1}, {1, 2, 3, 4});
  CHECK(max_abs_diff(pixel_shuffle(x, 1), x) == 0.0);
  Tensor y = pixel_shuffle(x, 2);
  CHECK(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y.to_vector() == std::vector<double>{1, 2, 3, 4});
  Tensor z = random_tensor({2, 32, 3, 5}, 21);
  CHECK(pixel_unshuffle(pixel_shuffle(z, 4), 4).to_vector() == z.to_vector());
  CHECK_THROWS_AS(pixel_shuffle(random_tensor({1, 6, 2, 2}, 1), 2), DimensionError);
  auto r = grad_check([](const std::vector<Tensor>& in) { return weighted_sum(pixel_shuffle(in[0], 2)); },
                      {random_tensor({1, 8, 2, 3}, 22)});
  CHECK(r.max_rel < 1e-6);
}

TEST_CASE("backward examples") {
  Tensor x = random_tensor({3, 4}, 23).set_requires_grad(true);
  sum(x).backward();
  for (double g : x.grad().to_vector()) CHECK(g == 1.0);

  Tensor s = Tensor::scalar(3.0, DType::f64);
  s.set_requires_grad(true);
  mul(s, s).backward();
  CHECK(s.grad().item() == 6.0);

  // Gradients accumulate across backward calls rather than overwrite.
  mul(s, s).backward();
  CHECK(s.grad().item() == 12.0);
}

TEST_CASE("a tensor reused by two consumers receives the summed gradient") {
  Tensor x = random_tensor({4}, 24).set_requires_grad(true);
  Tensor y = add(scale(x, 2.0), mul(x, x));
  sum(y).backward();
  const auto g = x.grad().to_vector();
  const auto xv = x.to_vector();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 + 2 * xv[i]));
}

TEST_CASE("elementwise, shape and reduction gradients") {
  auto chk = [](auto f, std::vector<Tensor> in) {
    auto r = grad_check(f, std::move(in));
    CHECK(r.max_rel < 1e-5);
  };
  chk([](const std::vector<Tensor>& in) { return weighted_sum(add(in[0], in[1])); },
      {random_tensor({2, 3, 4}, 30), random_tensor({3, 1}, 31)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(sub(in[0], in[1])); },
      {random_tensor({2, 3}, 32), random_tensor({2, 3}, 33)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(mul(in[0], in[1])); },
      {random_tensor({2, 1, 4}, 34), random_tensor({3, 4}, 35)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(gelu(in[0])); }, {random_tensor({10}, 36, DType::f64, -3, 3)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(permute(in[0], {2, 0, 1})); }, {random_tensor({2, 3, 4}, 37)});
  chk([](const std::vector<Tensor>& in) {
        std::vector<Tensor> parts{in[0], in[1]};
        return weighted_sum(concat(parts, 1));
      },
      {random_tensor({2, 3, 2}, 38), random_tensor({2, 1, 2}, 39)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(slice(in[0], 1, 1, 2)); }, {random_tensor({2, 4, 3}, 40)});
  chk([](const std::vector<Tensor>& in) { return l1_loss(in[0], in[1]); },
      {random_tensor({3, 5}, 41), random_tensor({3, 5}, 42)});
  chk([](const std::vector<Tensor>& in) { return weighted_sum(pad_reflect_br(in[0], 3, 2)); }, {random_tensor({1, 2, 3, 3}, 43)});
}

TEST_CASE("gelu uses the exact erf form") {
  auto y = gelu(t64({3}, {-1.0, 0.0, 1.0})).to_vector();
  CHECK(y[0] == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
  CHECK(y[1] == 0.0);
  CHECK(y[2] == doctest::Approx(0.8413447460685429).epsilon(1e-14));
}

TEST_CASE("reflect_index folds arbitrary offsets") {
  CHECK(reflect_index(-1, 4) == 1);
  CHECK(reflect_index(4, 4) == 2);
  CHECK(reflect_index(7, 4) == 1);
  CHECK(reflect_index(5, 1) == 0);
  Tensor x = random_tensor({1, 1, 4, 4}, 44);
  Tensor p = pad_reflect_br(x, 4, 4);
  CHECK(p.shape() == Shape{1, 1, 8, 8});
  CHECK(crop_tl(p, 4, 4).to_vector() == x.to_vector());
}

TEST_CASE("deterministic forward") {
  Tensor a = random_tensor({8, 16}, 45, DType::f32), b = random_tensor({16, 8}, 46, DType::f32);
  CHECK(matmul(a, b).to_vector() == matmul(a, b).to_vector());
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = random_tensor({3}, 47).set_requires_grad(true);
  NoGradGuard ng;
  Tensor y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
}
