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

// Test-only oracles: central finite differences and seeded random tensors.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bit/ops.hpp"
#include "bit/tensor.hpp"

namespace bit::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, DType dt = DType::f64, double lo = -1.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = u(rng);
  return Tensor::from_vector(shape, v, dt);
}

inline void set_element(Tensor& t, std::int64_t i, double value) {
  dispatch(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    t.mutable_data<T>()[static_cast<std::size_t>(i)] = static_cast<T>(value);
  });
}

/// Per-element relative error with a small absolute floor.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  double max_rel = 0;
  std::int64_t checked = 0;
};

/// Compares reverse-mode gradients of scalar `f` with central differences
/// for every element (or a strided subset) of each input.
/// `stencil` 2 uses (f(x+h) - f(x-h)) / 2h; 4 uses the five-point central
/// stencil, accurate to O(h^4), for deep compositions with small gradients.
inline GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                  std::vector<Tensor> inputs, double h = 1e-5, std::int64_t max_per_input = 64,
                                  int stencil = 2) {
  for (auto& t : inputs) {
    t.zero_grad();
    t.set_requires_grad(true);
  }
  Tensor y = f(inputs);
  y.backward();
  GradCheckResult res;
  NoGradGuard ng;
  for (auto& t : inputs) {
    const auto g = t.grad().to_vector();
    const auto n = t.numel();
    const std::int64_t step = std::max<std::int64_t>(1, n / max_per_input);
    for (std::int64_t i = 0; i < n; i += step) {
      const double orig = t.at(i);
      auto at = [&](double offset) {
        set_element(t, i, orig + offset);
        return f(inputs).item();
      };
      double numeric = 0;
      if (stencil == 4) {
        numeric = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      } else {
        numeric = (at(h) - at(-h)) / (2 * h);
      }
      set_element(t, i, orig);
      res.max_rel = std::max(res.max_rel, rel_error(g[static_cast<std::size_t>(i)], numeric));
      ++res.checked;
    }
  }
  return res;
}

/// Reduces a tensor to a scalar through fixed random weights, so every
/// output element contributes a distinct gradient.
inline Tensor weighted_sum(const Tensor& y, std::uint64_t seed = 99) {
  return sum(mul(y, random_tensor(y.shape(), seed, y.dtype())));
}

}  // namespace bit::testing
