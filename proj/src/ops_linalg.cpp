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

#include <Eigen/Core>

#include "bit/ops.hpp"
#include "broadcast.hpp"

namespace bit {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// C (m x n) (+)= op(A) * op(B), all row-major; op(A) is m x k.
template <class T>
void gemm(const T* a, bool trans_a, const T* b, bool trans_b, T* c, std::int64_t m, std::int64_t n, std::int64_t k,
          bool accumulate) {
  using CMap = Eigen::Map<const RowMat<T>>;
  Eigen::Map<RowMat<T>> C(c, m, n);
  const CMap A(a, trans_a ? k : m, trans_a ? m : k);
  const CMap B(b, trans_b ? n : k, trans_b ? k : n);
  if (!accumulate) C.setZero();
  if (!trans_a && !trans_b) {
    C.noalias() += A * B;
  } else if (trans_a && !trans_b) {
    C.noalias() += A.transpose() * B;
  } else if (!trans_a && trans_b) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() += A.transpose() * B.transpose();
  }
}

struct MatmulPlan {
  Shape out_shape;
  std::int64_t m = 0, k = 0, n = 0;
  // One entry per product: matrix indices into a, b and out.
  std::vector<std::array<std::int64_t, 3>> items;
};

MatmulPlan plan_matmul(const Shape& as, const Shape& bs) {
  if (as.size() < 2 || bs.size() < 2) {
    throw DimensionError(str_cat("matmul needs rank >= 2 operands, got ", shape_str(as), " and ", shape_str(bs)));
  }
  MatmulPlan p;
  p.m = as[as.size() - 2];
  p.k = as[as.size() - 1];
  p.n = bs[bs.size() - 1];
  if (bs[bs.size() - 2] != p.k) {
    throw DimensionError(str_cat("matmul inner extents differ: ", shape_str(as), " x ", shape_str(bs)));
  }
  const Shape ba(as.begin(), as.end() - 2);
  const Shape bb(bs.begin(), bs.end() - 2);
  Shape batch;
  try {
    batch = broadcast_shapes(ba, bb);
  } catch (const DimensionError&) {
    throw DimensionError(str_cat("matmul batch prefixes not broadcastable: ", shape_str(as), " x ", shape_str(bs)));
  }
  p.out_shape = batch;
  p.out_shape.push_back(p.m);
  p.out_shape.push_back(p.n);

  const std::int64_t nb = shape_numel(batch);
  const std::int64_t nbb = shape_numel(bb);
  if (nbb == 1) {
    // b is shared by every batch entry: one tall product.
    p.m *= nb;
    p.items.push_back({0, 0, 0});
    return p;
  }
  const auto sa = detail::broadcast_strides(ba, batch);
  const auto sb = detail::broadcast_strides(bb, batch);
  std::vector<std::int64_t> idx(batch.size(), 0);
  for (std::int64_t c = 0; c < nb; ++c) {
    std::int64_t ia = 0, ib = 0;
    for (std::size_t d = 0; d < batch.size(); ++d) {
      ia += idx[d] * sa[d];
      ib += idx[d] * sb[d];
    }
    p.items.push_back({ia, ib, c});
    for (std::size_t d = batch.size(); d-- > 0;) {
      if (++idx[d] < batch[d]) break;
      idx[d] = 0;
    }
  }
  return p;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::check_same_dtype(a, b, "matmul");
  auto plan = std::make_shared<const MatmulPlan>(plan_matmul(a.shape(), b.shape()));
  Tensor out = dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor c = make_tensor<T>(plan->out_shape);
    const T* pa = a.data<T>().data();
    const T* pb = b.data<T>().data();
    T* pc = c.mutable_data<T>().data();
    const auto m = plan->m, n = plan->n, k = plan->k;
    for (const auto& it : plan->items) {
      gemm<T>(pa + it[0] * m * k, false, pb + it[1] * k * n, false, pc + it[2] * m * n, m, n, k, false);
    }
    flop_counter().matmul_flops += 2 * m * n * k * static_cast<std::int64_t>(plan->items.size());
    return c;
  });
  return record(out, "matmul", {a, b}, [a, b, plan](const Tensor& g) -> std::vector<Tensor> {
    return dispatch(a.dtype(), [&](auto tag) -> std::vector<Tensor> {
      using T = decltype(tag);
      const auto m = plan->m, n = plan->n, k = plan->k;
      const T* pg = g.data<T>().data();
      Tensor ga, gb;
      if (a.requires_grad()) {
        ga = make_tensor<T>(a.shape());
        T* p = ga.mutable_data<T>().data();
        const T* pb = b.data<T>().data();
        for (const auto& it : plan->items) gemm<T>(pg + it[2] * m * n, false, pb + it[1] * k * n, true, p + it[0] * m * k, m, k, n, true);
      }
      if (b.requires_grad()) {
        gb = make_tensor<T>(b.shape());
        T* p = gb.mutable_data<T>().data();
        const T* pa = a.data<T>().data();
        for (const auto& it : plan->items) gemm<T>(pa + it[0] * m * k, true, pg + it[2] * m * n, false, p + it[1] * k * n, k, n, m, true);
      }
      return {ga, gb};
    });
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.rank() < 1 || x.dim(-1) != weight.dim(0)) {
    throw DimensionError(str_cat("linear: input ", shape_str(x.shape()), " vs weight ", shape_str(weight.shape())));
  }
  Shape flat{x.numel() / x.dim(-1), x.dim(-1)};
  Tensor y = matmul(reshape(x, flat), weight);
  if (bias.defined()) y = add(y, bias);
  Shape out = x.shape();
  out.back() = weight.dim(1);
  return reshape(y, out);
}

}  // namespace bit
