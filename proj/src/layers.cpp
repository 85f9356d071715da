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

#include "bit/layers.hpp"

#include <algorithm>
#include <cmath>

namespace bit {

std::int64_t count_scalars(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

namespace {

Tensor leaf_from(const Shape& shape, std::vector<double> values, DType dtype) {
  Tensor t = Tensor::from_vector(shape, values, dtype);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Tensor trunc_normal_param(const Shape& shape, double std, DType dtype, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) {
    do {
      x = nd(rng);
    } while (std::abs(x) > 2 * std);
  }
  return leaf_from(shape, std::move(v), dtype);
}

Tensor uniform_param(const Shape& shape, double bound, DType dtype, Rng& rng) {
  std::uniform_real_distribution<double> ud(-bound, bound);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = ud(rng);
  return leaf_from(shape, std::move(v), dtype);
}

Tensor constant_param(const Shape& shape, double value, DType dtype) {
  Tensor t = Tensor::full(shape, value, dtype);
  t.set_requires_grad(true);
  return t;
}

Linear::Linear(std::int64_t in, std::int64_t out, DType dtype, Rng& rng, bool with_bias)
    : weight(trunc_normal_param({in, out}, 0.02, dtype, rng)) {
  if (with_bias) bias = constant_param({out}, 0.0, dtype);
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

Conv2d::Conv2d(std::int64_t in, std::int64_t out, int kernel, int stride, DType dtype, Rng& rng, PadMode pad_mode) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  weight = uniform_param({out, in, kernel, kernel}, bound, dtype, rng);
  bias = uniform_param({out}, bound, dtype, rng);
  opts = {stride, kernel / 2, pad_mode};
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(std::int64_t dim, DType dtype)
    : gamma(constant_param({dim}, 1.0, dtype)), beta(constant_param({dim}, 0.0, dtype)) {}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

Tensor find_param(const ParamList& params, const std::string& name) {
  for (const auto& p : params)
    if (p.name == name) return p.tensor;
  throw ConfigError("no parameter named " + name);
}

void zero_fill(Tensor& param) {
  dispatch(param.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto d = param.mutable_data<T>();
    std::fill(d.begin(), d.end(), T(0));
  });
}

void assign_values(Tensor& param, const Tensor& src) {
  if (src.shape() != param.shape()) {
    throw DimensionError(str_cat("assign_values: shape ", shape_str(src.shape()), " vs ", shape_str(param.shape())));
  }
  Tensor converted = src.dtype() == param.dtype() ? src : src.to(param.dtype());
  dispatch(param.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto from = converted.data<T>();
    std::copy(from.begin(), from.end(), param.mutable_data<T>().begin());
  });
}

}  // namespace bit
