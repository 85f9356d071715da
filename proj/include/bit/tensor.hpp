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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bit/errors.hpp"

namespace bit {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

using Shape = std::vector<std::int64_t>;

std::string to_string(DType dt);
std::string shape_str(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

template <class T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

/// Invokes `f(T{})` with T = float or double according to `dt`.
template <class F>
decltype(auto) dispatch(DType dt, F&& f) {
  if (dt == DType::f32) return f(float{});
  return f(double{});
}

class Tensor;
struct TensorImpl;

/// Backward rule of one recorded operation. Receives the gradient of the
/// operation's output and returns one gradient per input (an undefined
/// Tensor where the input does not need one).
struct GradFn {
  const char* name = "";
  std::vector<Tensor> inputs;
  std::function<std::vector<Tensor>(const Tensor& grad_out)> backward;
};

using Storage = std::variant<std::vector<float>, std::vector<double>>;

struct TensorImpl {
  Shape shape;
  DType dtype = DType::f32;
  std::shared_ptr<Storage> storage;
  bool requires_grad = false;
  std::shared_ptr<TensorImpl> grad;
  std::shared_ptr<GradFn> grad_fn;
};

/// Dense row-major tensor handle. Copies share the underlying impl; values are
/// treated as immutable except through `mutable_data` (parameter updates).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape, DType dtype = DType::f32);
  static Tensor ones(const Shape& shape, DType dtype = DType::f32);
  static Tensor full(const Shape& shape, double value, DType dtype = DType::f32);
  static Tensor scalar(double value, DType dtype = DType::f32);
  static Tensor from_vector(const Shape& shape, std::span<const double> values,
                            DType dtype = DType::f32);
  template <class T>
  static Tensor from_data(const Shape& shape, std::vector<T> values);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const;
  std::int64_t rank() const { return static_cast<std::int64_t>(shape().size()); }
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t numel() const;
  DType dtype() const;

  template <class T>
  std::span<const T> data() const;
  /// Writable view; only for initialisation and optimizer updates of leaves.
  template <class T>
  std::span<T> mutable_data();

  double item() const;
  double at(std::int64_t flat_index) const;
  std::vector<double> to_vector() const;

  Tensor to(DType dtype) const;
  Tensor clone() const;
  /// Same values, no autograd history; shares storage.
  Tensor detach() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;
  const std::shared_ptr<GradFn>& grad_fn() const;
  Tensor grad() const;
  bool has_grad() const;
  void zero_grad();
  /// Adds `g` into this leaf's gradient accumulator.
  void accumulate_grad(const Tensor& g);

  /// Reverse-mode sweep from this (scalar or seeded) tensor.
  void backward() const;
  void backward(const Tensor& seed) const;

  bool same_impl(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Allocates an uninitialised-to-zero tensor of `shape` holding T.
template <class T>
Tensor make_tensor(const Shape& shape) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype_of<T>();
  impl->storage = std::make_shared<Storage>(std::vector<T>(static_cast<std::size_t>(shape_numel(shape))));
  return Tensor(std::move(impl));
}

template <class T>
Tensor Tensor::from_data(const Shape& shape, std::vector<T> values) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw DimensionError(str_cat("from_data: ", values.size(), " values for shape ", shape_str(shape)));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype_of<T>();
  impl->storage = std::make_shared<Storage>(std::move(values));
  return Tensor(std::move(impl));
}

template <class T>
std::span<const T> Tensor::data() const {
  if (!impl_) throw std::logic_error("data() on undefined tensor");
  if (impl_->dtype != dtype_of<T>()) {
    throw std::invalid_argument(str_cat("data<", to_string(dtype_of<T>()), ">() on ", to_string(impl_->dtype), " tensor"));
  }
  const auto& v = std::get<std::vector<T>>(*impl_->storage);
  return {v.data(), v.size()};
}

template <class T>
std::span<T> Tensor::mutable_data() {
  if (!impl_) throw std::logic_error("mutable_data() on undefined tensor");
  if (impl_->dtype != dtype_of<T>()) {
    throw std::invalid_argument(str_cat("mutable_data<", to_string(dtype_of<T>()), ">() on ", to_string(impl_->dtype), " tensor"));
  }
  auto& v = std::get<std::vector<T>>(*impl_->storage);
  return {v.data(), v.size()};
}

/// Whether new operations are recorded for reverse mode (thread local).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Attaches a backward rule to `out` when recording is on and any input
/// participates in differentiation. Returns `out`.
Tensor record(Tensor out, const char* name, std::vector<Tensor> inputs,
              std::function<std::vector<Tensor>(const Tensor&)> backward);

/// Thread-local multiply-accumulate counters, used by the cost harness.
struct FlopCounter {
  std::int64_t matmul_flops = 0;
  std::int64_t conv_flops = 0;
  std::int64_t total() const { return matmul_flops + conv_flops; }
};
FlopCounter& flop_counter();
void reset_flop_counter();

}  // namespace bit
