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

#include "bit/tensor.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace bit {

std::string to_string(DType dt) { return dt == DType::f32 ? "f32" : "f64"; }

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw DimensionError("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

Tensor Tensor::zeros(const Shape& shape, DType dtype) { return full(shape, 0.0, dtype); }
Tensor Tensor::ones(const Shape& shape, DType dtype) { return full(shape, 1.0, dtype); }

Tensor Tensor::full(const Shape& shape, double value, DType dtype) {
  return dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    Tensor t = make_tensor<T>(shape);
    std::ranges::fill(t.mutable_data<T>(), static_cast<T>(value));
    return t;
  });
}

Tensor Tensor::scalar(double value, DType dtype) { return full({}, value, dtype); }

Tensor Tensor::from_vector(const Shape& shape, std::span<const double> values, DType dtype) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw DimensionError(str_cat("from_vector: ", values.size(), " values for shape ", shape_str(shape)));
  }
  return dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    Tensor t = make_tensor<T>(shape);
    auto d = t.mutable_data<T>();
    std::ranges::transform(values, d.begin(), [](double v) { return static_cast<T>(v); });
    return t;
  });
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("shape() on undefined tensor");
  return impl_->shape;
}

std::int64_t Tensor::dim(std::int64_t axis) const {
  const auto r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw DimensionError(str_cat("axis ", axis, " out of range for shape ", shape_str(shape())));
  return shape()[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return shape_numel(shape()); }

DType Tensor::dtype() const {
  if (!impl_) throw std::logic_error("dtype() on undefined tensor");
  return impl_->dtype;
}

double Tensor::at(std::int64_t i) const {
  return dispatch(dtype(), [&](auto tag) -> double {
    using T = decltype(tag);
    return static_cast<double>(data<T>()[static_cast<std::size_t>(i)]);
  });
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return at(0);
}

std::vector<double> Tensor::to_vector() const {
  return dispatch(dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto d = data<T>();
    return std::vector<double>(d.begin(), d.end());
  });
}

Tensor Tensor::to(DType target) const {
  return dispatch(target, [&](auto tag) {
    using U = decltype(tag);
    Tensor out = make_tensor<U>(shape());
    auto dst = out.mutable_data<U>();
    dispatch(dtype(), [&](auto src_tag) {
      using T = decltype(src_tag);
      auto src = data<T>();
      std::ranges::transform(src, dst.begin(), [](T v) { return static_cast<U>(v); });
    });
    return out;
  });
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = std::make_shared<Storage>(*impl_->storage);
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = impl_->storage;
  return Tensor(std::move(impl));
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  if (!impl_) throw std::logic_error("set_requires_grad on undefined tensor");
  if (impl_->grad_fn) throw std::logic_error("set_requires_grad on a non-leaf tensor");
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->grad_fn; }

const std::shared_ptr<GradFn>& Tensor::grad_fn() const { return impl_->grad_fn; }

Tensor Tensor::grad() const { return impl_ && impl_->grad ? Tensor(impl_->grad) : Tensor(); }

bool Tensor::has_grad() const { return impl_ && impl_->grad; }

void Tensor::zero_grad() {
  if (impl_) impl_->grad.reset();
}

namespace {

template <class T>
void add_into(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Sums `b` into `a` (same shape and dtype); `a` is replaced by a fresh buffer
// when it is shared with someone else.
void accumulate(Tensor& acc, const Tensor& g) {
  if (!acc.defined()) {
    acc = g.clone();
    return;
  }
  if (acc.shape() != g.shape() || acc.dtype() != g.dtype()) {
    throw DimensionError(str_cat("gradient shape ", shape_str(g.shape()), " does not match ", shape_str(acc.shape())));
  }
  dispatch(acc.dtype(), [&](auto tag) {
    using T = decltype(tag);
    add_into<T>(acc.mutable_data<T>(), g.data<T>());
  });
}

thread_local bool t_grad_enabled = true;
thread_local FlopCounter t_flops;

}  // namespace

void Tensor::accumulate_grad(const Tensor& g) {
  Tensor acc = has_grad() ? grad() : Tensor();
  accumulate(acc, g);
  impl_->grad = acc.impl();
}

void Tensor::backward() const {
  if (numel() != 1) throw DimensionError("backward() without seed needs a single-element tensor, got " + shape_str(shape()));
  backward(Tensor::ones(shape(), dtype()));
}

void Tensor::backward(const Tensor& seed) const {
  if (seed.shape() != shape()) throw DimensionError("backward seed shape mismatch");
  if (!requires_grad()) throw std::logic_error("backward() on a tensor that does not require grad");

  // Topological order by iterative DFS over grad_fn edges.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack{{impl_.get(), 0}};
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& fn = node->grad_fn;
    if (fn && next < fn->inputs.size()) {
      TensorImpl* child = fn->inputs[next++].impl().get();
      if (child && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  NoGradGuard no_grad;
  std::unordered_map<TensorImpl*, Tensor> pending;
  pending[impl_.get()] = seed.clone();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    auto found = pending.find(node);
    if (found == pending.end()) continue;
    Tensor g = std::move(found->second);
    pending.erase(found);
    if (!node->grad_fn) {
      if (!node->grad) {
        node->grad = g.impl();
      } else {
        Tensor acc(node->grad);
        accumulate(acc, g);
      }
      continue;
    }
    auto grads = node->grad_fn->backward(g);
    const auto& inputs = node->grad_fn->inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!grads[i].defined() || !inputs[i].requires_grad()) continue;
      accumulate(pending[inputs[i].impl().get()], grads[i]);
    }
  }
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor record(Tensor out, const char* name, std::vector<Tensor> inputs,
              std::function<std::vector<Tensor>(const Tensor&)> backward) {
  if (!t_grad_enabled) return out;
  const bool any = std::ranges::any_of(inputs, [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  auto fn = std::make_shared<GradFn>();
  fn->name = name;
  fn->inputs = std::move(inputs);
  fn->backward = std::move(backward);
  out.impl()->grad_fn = std::move(fn);
  out.impl()->requires_grad = true;
  return out;
}

FlopCounter& flop_counter() { return t_flops; }
void reset_flop_counter() { t_flops = FlopCounter{}; }

}  // namespace bit
