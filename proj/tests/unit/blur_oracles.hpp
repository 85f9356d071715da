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

#include <algorithm>
#include <cstdint>
#include <vector>

#include "bit/tensor.hpp"

namespace bit::testing {

/// Peaks of a 1-D profile with hysteresis: a peak counts once the signal has
/// risen more than `tol` above the last trough and then fallen more than `tol`
/// below the running maximum.
inline int count_peaks(const std::vector<double>& v, double tol) {
  if (v.empty()) return 0;
  int peaks = 0;
  bool rising = true;
  double lo = v[0], hi = v[0];
  for (double x : v) {
    if (rising) {
      hi = std::max(hi, x);
      if (hi - lo > tol && hi - x > tol) {
        ++peaks;
        rising = false;
        lo = x;
      }
    } else {
      lo = std::min(lo, x);
      if (x - lo > tol) {
        rising = true;
        hi = x;
      }
    }
  }
  if (rising && hi - lo > tol && hi - v.back() <= tol && peaks == 0) ++peaks;
  return peaks;
}

/// Row y of channel c of a [3, H, W] image.
inline std::vector<double> image_row(const Tensor& img, std::int64_t c, std::int64_t y) {
  const auto H = img.dim(1), W = img.dim(2);
  const auto v = img.to_vector();
  return {v.begin() + (c * H + y) * W, v.begin() + (c * H + y + 1) * W};
}

/// Non-decreasing then non-increasing, allowing wiggles up to tol.
inline bool unimodal(const std::vector<double>& v, double tol) {
  std::size_t i = 1;
  while (i < v.size() && v[i] >= v[i - 1] - tol) ++i;
  while (i < v.size() && v[i] <= v[i - 1] + tol) ++i;
  return i == v.size();
}

}  // namespace bit::testing
