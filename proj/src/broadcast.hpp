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
#include <vector>

#include "bit/tensor.hpp"

namespace bit::detail {

/// Strided iteration over an output shape with up to two broadcast operands.
/// Adjacent axes are coalesced so the innermost run is as long as possible.
struct BroadcastPlan {
  std::vector<std::int64_t> extent;
  std::vector<std::int64_t> stride_a;
  std::vector<std::int64_t> stride_b;
};

inline std::vector<std::int64_t> broadcast_strides(const Shape& operand, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<std::int64_t> strides(r, 0);
  std::int64_t s = 1;
  for (std::size_t k = 0; k < operand.size(); ++k) {
    const std::size_t oi = operand.size() - 1 - k;
    const std::size_t ri = r - 1 - k;
    strides[ri] = operand[oi] == 1 ? 0 : s;
    s *= operand[oi];
  }
  return strides;
}

inline BroadcastPlan plan_broadcast(const Shape& out, const Shape& a, const Shape& b) {
  auto sa = broadcast_strides(a, out);
  auto sb = broadcast_strides(b, out);
  BroadcastPlan p;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 1) continue;
    if (!p.extent.empty()) {
      const std::size_t j = p.extent.size() - 1;
      if (p.stride_a[j] == sa[i] * out[i] && p.stride_b[j] == sb[i] * out[i]) {
        p.extent[j] *= out[i];
        p.stride_a[j] = sa[i];
        p.stride_b[j] = sb[i];
        continue;
      }
    }
    p.extent.push_back(out[i]);
    p.stride_a.push_back(sa[i]);
    p.stride_b.push_back(sb[i]);
  }
  if (p.extent.empty()) {
    p.extent.push_back(1);
    p.stride_a.push_back(0);
    p.stride_b.push_back(0);
  }
  return p;
}

/// Calls f(out_offset, a_offset, b_offset, run_length, a_stride, b_stride)
/// once per innermost run, in row-major output order.
template <class F>
void for_each_run(const BroadcastPlan& p, F&& f) {
  const std::size_t r = p.extent.size();
  const std::int64_t inner = p.extent[r - 1];
  std::int64_t outer = 1;
  for (std::size_t i = 0; i + 1 < r; ++i) outer *= p.extent[i];
  std::vector<std::int64_t> idx(r, 0);
  std::int64_t oa = 0, ob = 0, oo = 0;
  for (std::int64_t n = 0; n < outer; ++n) {
    f(oo, oa, ob, inner, p.stride_a[r - 1], p.stride_b[r - 1]);
    oo += inner;
    for (std::size_t d = r - 1; d-- > 0;) {
      ++idx[d];
      oa += p.stride_a[d];
      ob += p.stride_b[d];
      if (idx[d] < p.extent[d]) break;
      oa -= p.stride_a[d] * p.extent[d];
      ob -= p.stride_b[d] * p.extent[d];
      idx[d] = 0;
    }
  }
}

inline void check_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw std::invalid_argument(str_cat(op, ": dtype mismatch ", to_string(a.dtype()), " vs ", to_string(b.dtype())));
  }
}

}  // namespace bit::detail
