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

#include <random>
#include <string>
#include <vector>

#include "bit/ops.hpp"
#include "bit/tensor.hpp"

namespace bit {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

using Rng = std::mt19937_64;

std::int64_t count_scalars(const ParamList& params);
/// The tensor named `name`; throws ConfigError if absent.
Tensor find_param(const ParamList& params, const std::string& name);

/// Normal(0, std) truncated to +-2 std, as a trainable leaf.
Tensor trunc_normal_param(const Shape& shape, double std, DType dtype, Rng& rng);
Tensor uniform_param(const Shape& shape, double bound, DType dtype, Rng& rng);
Tensor constant_param(const Shape& shape, double value, DType dtype);

/// y = x W + b over the last axis; W is [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(std::int64_t in, std::int64_t out, DType dtype, Rng& rng, bool with_bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Conv2d {
  Tensor weight;
  Tensor bias;
  Conv2dOptions opts;

  Conv2d() = default;
  /// PyTorch-style uniform(+-1/sqrt(fan_in)) initialisation; "same" padding for stride 1.
  Conv2d(std::int64_t in, std::int64_t out, int kernel, int stride, DType dtype, Rng& rng,
         PadMode pad_mode = PadMode::zeros);
  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, opts); }
  void collect(const std::string& prefix, ParamList& out) const;
  std::int64_t in_channels() const { return weight.dim(1); }
  std::int64_t out_channels() const { return weight.dim(0); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(std::int64_t dim, DType dtype);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta, 1e-5); }
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Overwrites every value of `param` with zero (used by tests and ablations).
void zero_fill(Tensor& param);
/// Copies the values of `src` (same shape, any dtype) into `param` in place.
void assign_values(Tensor& param, const Tensor& src);

}  // namespace bit
