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

#include "svgnet/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace svgnet::nn {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
  ss << ']';
  return ss.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail(ErrorCode::ShapeMismatch, "negative dimension in " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

template <typename T>
Var<T> Var<T>::constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> Var<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var<T>(std::move(node));
}

namespace {

template <typename T>
GradientTape<T>*& tape_slot() {
  thread_local GradientTape<T>* slot = nullptr;
  return slot;
}

}  // namespace

template <typename T>
GradientTape<T>* active_tape() {
  return tape_slot<T>();
}

template <typename T>
TapeScope<T>::TapeScope(GradientTape<T>& tape) : previous_(tape_slot<T>()) {
  tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
void GradientTape<T>::record(const std::shared_ptr<Node<T>>& node) {
  node->tape = this;
  node->tape_index = nodes_.size();
  nodes_.push_back(node);
}

template <typename T>
void GradientTape<T>::clear() {
  for (auto& n : nodes_) n->tape = nullptr;
  nodes_.clear();
}

template <typename T>
void GradientTape<T>::backward(const Var<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    fail(ErrorCode::ShapeMismatch, "backward needs a scalar loss");
  }
  Node<T>* root = loss.node();
  if (root->tape != this || root->tape_index >= nodes_.size() || nodes_[root->tape_index].get() != root) {
    fail(ErrorCode::DisconnectedLoss, "loss was not recorded on this tape");
  }
  for (auto& n : nodes_) n->grad = Tensor<T>();
  root->grad_buffer()[0] = T(1);
  for (std::size_t i = root->tape_index + 1; i-- > 0;) {
    Node<T>& n = *nodes_[i];
    if (n.grad.numel() == 0 || !n.backward_fn) continue;
    n.backward_fn(n);
  }
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->is_leaf = false;
  GradientTape<T>* tape = active_tape<T>();
  const bool needs = tape && std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) {
                       return v.defined() && v.requires_grad();
                     });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward_fn = std::move(backward_fn);
    tape->record(node);
  }
  return Var<T>(std::move(node));
}

#define SVGNET_INSTANTIATE(T)                                                                 \
  template class Var<T>;                                                                      \
  template class GradientTape<T>;                                                             \
  template class TapeScope<T>;                                                                \
  template GradientTape<T>* active_tape<T>();                                                 \
  template Var<T> make_result<T>(Tensor<T>, std::vector<Var<T>>, std::function<void(Node<T>&)>);

SVGNET_INSTANTIATE(float)
SVGNET_INSTANTIATE(double)

#undef SVGNET_INSTANTIATE

}  // namespace svgnet::nn
