/*
 * Copyright (c) 2026 The SVGNet Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Dense tensors and the define-by-run gradient tape.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "svgnet/error.hpp"

namespace svgnet::nn {

using Shape = std::vector<std::int64_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Cache-line aligned storage. Vectorized kernels peel a number of leading
/// elements that depends on the buffer address, so fixed alignment keeps
/// reductions in a fixed order from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using Storage = std::vector<T, AlignedAllocator<T>>;

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, const std::vector<T>& values)
      : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (data_.size() != shape_numel(shape_)) {
      fail(ErrorCode::ShapeMismatch, "value count " + std::to_string(data_.size()) + " does not match shape " +
                                         shape_to_string(shape_));
    }
  }

  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  Storage<T>& storage() { return data_; }
  const Storage<T>& storage() const { return data_; }
  std::vector<T> to_vector() const { return {data_.begin(), data_.end()}; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Same values, new shape with the same element count.
  Tensor reshaped(Shape shape) const {
    Tensor t = *this;
    if (shape_numel(shape) != t.numel()) {
      fail(ErrorCode::ShapeMismatch, "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    t.shape_ = std::move(shape);
    return t;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  Shape shape_;
  Storage<T> data_;
};

template <typename T>
class GradientTape;

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first use
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;
  const GradientTape<T>* tape = nullptr;
  std::size_t tape_index = 0;

  /// Zero-initialized gradient buffer shaped like value.
  Tensor<T>& grad_buffer() {
    if (grad.numel() != value.numel()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a node in the computation graph; copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value);
  static Var leaf(Tensor<T> value, bool requires_grad = true);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  /// Mutating a value recorded on a live tape invalidates its gradients.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::size_t i) const { return node_->value.dim(i); }
  std::size_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Accumulated gradient (zeros if nothing has flowed yet).
  const Tensor<T>& grad() const { return node_->grad_buffer(); }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad_buffer().fill(T(0)); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  /// First element, for scalar results.
  T item() const { return node_->value[0]; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Records operation nodes in creation order (a valid topological order).
template <typename T>
class GradientTape {
 public:
  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  void record(const std::shared_ptr<Node<T>>& node);
  std::size_t size() const { return nodes_.size(); }
  void clear();

  /// Propagates d(loss)/d(node) back through the recorded graph into leaf
  /// gradients. Leaf gradients accumulate across calls; intermediate
  /// gradients are reset first.
  void backward(const Var<T>& loss);

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

/// Installs a tape as the thread's recording target for its lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(GradientTape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape<T>* previous_;
};

template <typename T>
GradientTape<T>* active_tape();

/// Free-function form of GradientTape::backward.
template <typename T>
void backward(GradientTape<T>& tape, const Var<T>& loss) {
  tape.backward(loss);
}

/// Builds a result node; records it when any input needs gradients and a
/// tape is active.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward_fn);

}  // namespace svgnet::nn
