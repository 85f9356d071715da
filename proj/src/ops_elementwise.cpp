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
#include <numbers>

#include "bit/ops.hpp"
#include "broadcast.hpp"

namespace bit {

using detail::check_same_dtype;

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t k = 0; k < r; ++k) {
    const std::int64_t ea = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::int64_t eb = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError(str_cat("cannot broadcast shapes ", shape_str(a), " and ", shape_str(b)));
    }
    out[r - 1 - k] = ea == 1 ? eb : ea;
  }
  return out;
}

namespace {

enum class BinOp { add, sub, mul };

template <class T>
Tensor binary_kernel(const Tensor& a, const Tensor& b, BinOp op) {
  const Shape out_shape = a.shape() == b.shape() ? a.shape() : broadcast_shapes(a.shape(), b.shape());
  Tensor out = make_tensor<T>(out_shape);
  auto o = out.mutable_data<T>();
  auto x = a.data<T>();
  auto y = b.data<T>();
  auto apply = [op](T u, T v) {
    switch (op) {
      case BinOp::add: return u + v;
      case BinOp::sub: return u - v;
      default: return u * v;
    }
  };
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = apply(x[i], y[i]);
    return out;
  }
  const auto plan = detail::plan_broadcast(out_shape, a.shape(), b.shape());
  detail::for_each_run(plan, [&](std::int64_t oo, std::int64_t ia, std::int64_t ib, std::int64_t n, std::int64_t sa,
                                 std::int64_t sb) {
    for (std::int64_t j = 0; j < n; ++j) o[oo + j] = apply(x[ia + j * sa], y[ib + j * sb]);
  });
  return out;
}

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  check_same_dtype(a, b, name);
  Tensor out = dispatch(a.dtype(), [&](auto tag) { return binary_kernel<decltype(tag)>(a, b, op); });
  return record(out, name, {a, b}, [a, b, op](const Tensor& g) -> std::vector<Tensor> {
    Tensor ga, gb;
    switch (op) {
      case BinOp::add:
        ga = reduce_to(g, a.shape());
        gb = reduce_to(g, b.shape());
        break;
      case BinOp::sub:
        ga = reduce_to(g, a.shape());
        gb = reduce_to(scale(g, -1.0), b.shape());
        break;
      case BinOp::mul:
        if (a.requires_grad()) ga = reduce_to(mul(g, b.detach()), a.shape());
        if (b.requires_grad()) gb = reduce_to(mul(g, a.detach()), b.shape());
        break;
    }
    return {ga, gb};
  });
}

template <class T, class F>
Tensor unary_kernel(const Tensor& x, F f) {
  Tensor out = make_tensor<T>(x.shape());
  auto o = out.mutable_data<T>();
  auto in = x.data<T>();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return out;
}

template <class F>
Tensor unary(const Tensor& x, F f) {
  return dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return unary_kernel<T>(x, [&](T v) { return static_cast<T>(f(static_cast<double>(v))); });
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::mul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T f = static_cast<T>(factor);
    return unary_kernel<T>(x, [f](T v) { return v * f; });
  });
  return record(out, "scale", {x}, [factor](const Tensor& g) -> std::vector<Tensor> { return {scale(g, factor)}; });
}

Tensor add_scalar(const Tensor& x, double value) {
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T c = static_cast<T>(value);
    return unary_kernel<T>(x, [c](T v) { return v + c; });
  });
  return record(out, "add_scalar", {x}, [](const Tensor& g) -> std::vector<Tensor> { return {g}; });
}

Tensor gelu(const Tensor& x) {
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return unary_kernel<T>(x, [](T v) { return static_cast<T>(0.5) * v * (1 + std::erf(v * static_cast<T>(std::numbers::sqrt2 / 2))); });
  });
  return record(out, "gelu", {x}, [x](const Tensor& g) -> std::vector<Tensor> {
    // d/dx = Phi(x) + x phi(x)
    Tensor d = unary(x, [](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + v * pdf;
    });
    return {mul(g, d)};
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  Tensor out = unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); });
  return record(out, "clamp", {x}, [x, lo, hi](const Tensor& g) -> std::vector<Tensor> {
    Tensor m = unary(x, [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
    return {mul(g, m)};
  });
}

Tensor sum(const Tensor& x) {
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    double acc = 0;
    for (T v : x.data<T>()) acc += v;
    return Tensor::scalar(acc, x.dtype());
  });
  const Shape shape = x.shape();
  return record(out, "sum", {x}, [shape](const Tensor& g) -> std::vector<Tensor> {
    return {Tensor::full(shape, g.item(), g.dtype())};
  });
}

Tensor mean(const Tensor& x) {
  const auto n = x.numel();
  if (n == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Tensor reduce_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  if (broadcast_shapes(shape, x.shape()) != x.shape()) {
    throw DimensionError(str_cat("reduce_to: ", shape_str(x.shape()), " is not a broadcast of ", shape_str(shape)));
  }
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor r = make_tensor<T>(shape);
    auto o = r.mutable_data<T>();
    auto in = x.data<T>();
    const auto plan = detail::plan_broadcast(x.shape(), shape, x.shape());
    detail::for_each_run(plan, [&](std::int64_t oo, std::int64_t ia, std::int64_t, std::int64_t n, std::int64_t sa,
                                   std::int64_t) {
      if (sa == 0) {
        T acc = 0;
        for (std::int64_t j = 0; j < n; ++j) acc += in[oo + j];
        o[ia] += acc;
      } else {
        for (std::int64_t j = 0; j < n; ++j) o[ia + j * sa] += in[oo + j];
      }
    });
    return r;
  });
  const Shape src = x.shape();
  return record(out, "reduce_to", {x}, [src](const Tensor& g) -> std::vector<Tensor> {
    return {add(Tensor::zeros(src, g.dtype()), g)};
  });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError(str_cat("l1_loss: shapes ", shape_str(pred.shape()), " and ", shape_str(target.shape())));
  }
  check_same_dtype(pred, target, "l1_loss");
  const double n = static_cast<double>(pred.numel());
  Tensor out = dispatch(pred.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto p = pred.data<T>();
    auto t = target.data<T>();
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
    return Tensor::scalar(acc / n, pred.dtype());
  });
  return record(out, "l1_loss", {pred, target}, [pred, target, n](const Tensor& g) -> std::vector<Tensor> {
    const double gs = g.item() / n;
    Tensor sign = dispatch(pred.dtype(), [&](auto tag) {
      using T = decltype(tag);
      Tensor s = make_tensor<T>(pred.shape());
      auto o = s.mutable_data<T>();
      auto p = pred.data<T>();
      auto t = target.data<T>();
      for (std::size_t i = 0; i < o.size(); ++i) {
        const T d = p[i] - t[i];
        o[i] = static_cast<T>(d > 0 ? gs : (d < 0 ? -gs : 0.0));
      }
      return s;
    });
    Tensor gt = target.requires_grad() ? scale(sign, -1.0) : Tensor();
    return {sign, gt};
  });
}

bool all_finite(const Tensor& x) {
  return dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    for (T v : x.data<T>()) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(str_cat("max_abs_diff: shapes ", shape_str(a.shape()), " and ", shape_str(b.shape())));
  }
  const auto x = a.to_vector();
  const auto y = b.to_vector();
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace bit
