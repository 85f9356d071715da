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

#include <sstream>

#include "bit/checkpoint.hpp"
#include "doctest.h"
#include "unit/gradcheck.hpp"

using namespace bit;
using bit::testing::random_tensor;

TEST_CASE("checkpoint roundtrip preserves names, shapes, dtypes and bits") {
  ParamList params{{"a.weight", random_tensor({3, 4}, 1, DType::f32)},
                   {"a.bias", random_tensor({4}, 2, DType::f64)},
                   {"scalar", Tensor::scalar(2.5, DType::f32)}};
  std::stringstream ss;
  write_checkpoint(ss, params);
  ParamList back = read_checkpoint(ss);
  REQUIRE(back.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(back[i].name == params[i].name);
    CHECK(back[i].tensor.shape() == params[i].tensor.shape());
    CHECK(back[i].tensor.dtype() == params[i].tensor.dtype());
    CHECK(back[i].tensor.to_vector() == params[i].tensor.to_vector());
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  ParamList params{{"w", random_tensor({8}, 3, DType::f32)}};
  std::stringstream ss;
  write_checkpoint(ss, params);
  const std::string bytes = ss.str();

  std::stringstream bad_magic("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(read_checkpoint(bad_magic), ConfigError);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  std::stringstream v(wrong_version);
  CHECK_THROWS_AS(read_checkpoint(v), ConfigError);

  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_checkpoint(cut), ConfigError);
}

TEST_CASE("assign_params copies by name with dtype conversion") {
  Tensor dst_w = Tensor::zeros({2, 2}, DType::f32);
  Tensor dst_b = Tensor::zeros({2}, DType::f32);
  ParamList dst{{"w", dst_w}, {"b", dst_b}};
  ParamList src{{"w", Tensor::from_data<double>({2, 2}, {1, 2, 3, 4})}};
  CHECK_THROWS_AS(assign_params(dst, src, true), ConfigError);
  CHECK(assign_params(dst, src, false) == 1);
  CHECK(dst_w.to_vector() == std::vector<double>{1, 2, 3, 4});

  ParamList wrong{{"w", Tensor::zeros({4}, DType::f32)}};
  CHECK_THROWS_AS(assign_params(dst, wrong, false), ConfigError);
}

TEST_CASE("save and load through the filesystem") {
  const auto path = std::filesystem::temp_directory_path() / "bit_ckpt_test.bitk";
  ParamList params{{"x", random_tensor({2, 3}, 4, DType::f32)}};
  save_checkpoint(path, params);
  ParamList back = load_checkpoint(path);
  CHECK(back[0].tensor.to_vector() == params[0].tensor.to_vector());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
}
