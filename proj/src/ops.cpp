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

#include "svgnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Core>

namespace svgnet::nn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMatrix = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapMatrix = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ConstMapRow = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using MapRow = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <typename T>
ConstMapMatrix<T> as_matrix(const Tensor<T>& t) {
  return ConstMapMatrix<T>(t.data(), t.dim(0), t.dim(1));
}

template <typename T>
MapMatrix<T> as_matrix(Tensor<T>& t) {
  return MapMatrix<T>(t.data(), t.dim(0), t.dim(1));
}

void check(bool ok, const char* op, const std::string& detail) {
  if (!ok) fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + detail);
}

template <typename T>
void require_matrix(const Var<T>& x, const char* op) {
  check(x.defined() && x.shape().size() == 2, op, "expected a rank-2 tensor, got " +
                                                      (x.defined() ? shape_to_string(x.shape()) : "undefined"));
}

/// Gradient buffer of input i when it participates in differentiation.
template <typename T>
Tensor<T>* input_grad(Node<T>& n, std::size_t i) {
  Node<T>* in = n.inputs[i].get();
  return in->requires_grad ? &in->grad_buffer() : nullptr;
}

std::size_t normalize_axis(std::int64_t axis, std::size_t rank, const char* op) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < 0) axis += r;
  check(axis >= 0 && axis < r, op, "axis out of range");
  return static_cast<std::size_t>(axis);
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= static_cast<std::size_t>(shape[i]);
  s.n = static_cast<std::size_t>(shape[axis]);
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= static_cast<std::size_t>(shape[i]);
  return s;
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  check(a.dim(1) == b.dim(0), "matmul", shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  Tensor<T> out(Shape{a.dim(0), b.dim(1)});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const auto& A = n.inputs[0]->value;
    const auto& B = n.inputs[1]->value;
    if (auto* ga = input_grad(n, 0)) as_matrix(*ga).noalias() += as_matrix(n.grad) * as_matrix(B).transpose();
    if (auto* gb = input_grad(n, 1)) as_matrix(*gb).noalias() += as_matrix(A).transpose() * as_matrix(n.grad);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "add", shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = input_grad(n, k)) {
        for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i];
      }
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "sub", shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i];
    }
    if (auto* g = input_grad(n, 1)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] -= n.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "mul", shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const auto& A = n.inputs[0]->value;
    const auto& B = n.inputs[1]->value;
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i] * B[i];
    }
    if (auto* g = input_grad(n, 1)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i] * A[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * factor;
  return make_result<T>(std::move(out), {x}, [factor](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i] * factor;
    }
  });
}

template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& row) {
  require_matrix(x, "add_row");
  check(row.numel() == static_cast<std::size_t>(x.dim(1)), "add_row", "row length must equal column count");
  const std::size_t m = static_cast<std::size_t>(x.dim(0)), c = static_cast<std::size_t>(x.dim(1));
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += row.value()[j];
  }
  return make_result<T>(std::move(out), {x, row}, [m, c](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i];
    }
    if (auto* g = input_grad(n, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < c; ++j) (*g)[j] += n.grad[i * c + j];
      }
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] > T(0) ? x.value()[i] : T(0);
  return make_result<T>(std::move(out), {x}, [](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      const auto& X = n.inputs[0]->value;
      for (std::size_t i = 0; i < g->numel(); ++i) {
        if (X[i] > T(0)) (*g)[i] += n.grad[i];
      }
    }
  });
}

template <typename T>
Var<T> softmax(const Var<T>& x, std::int64_t axis_in) {
  const std::size_t axis = normalize_axis(axis_in, x.shape().size(), "softmax");
  const AxisSplit s = split_at(x.shape(), axis);
  Tensor<T> out(x.shape());
  const auto& X = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      T mx = X[base];
      for (std::size_t k = 1; k < s.n; ++k) mx = std::max(mx, X[base + k * s.inner]);
      T total = 0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const T e = std::exp(X[base + k * s.inner] - mx);
        out[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] /= total;
    }
  }
  return make_result<T>(std::move(out), {x}, [s](Node<T>& n) {
    auto* g = input_grad(n, 0);
    if (!g) return;
    const auto& Y = n.value;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        T dot = 0;
        for (std::size_t k = 0; k < s.n; ++k) dot += n.grad[base + k * s.inner] * Y[base + k * s.inner];
        for (std::size_t k = 0; k < s.n; ++k) {
          const std::size_t i = base + k * s.inner;
          (*g)[i] += Y[i] * (n.grad[i] - dot);
        }
      }
    }
  });
}

namespace {

/// Normalizes along an axis; writes normalized values and per-slice 1/sigma.
template <typename T>
void normalize_slices(const Tensor<T>& X, const AxisSplit& s, T eps, Tensor<T>& out, std::vector<T>& inv_std) {
  inv_std.assign(s.outer * s.inner, T(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      T mu = 0;
      for (std::size_t k = 0; k < s.n; ++k) mu += X[base + k * s.inner];
      mu /= static_cast<T>(s.n);
      T var = 0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const T d = X[base + k * s.inner] - mu;
        var += d * d;
      }
      var /= static_cast<T>(s.n);
      const T inv = T(1) / std::sqrt(var + eps);
      inv_std[o * s.inner + in] = inv;
      for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] = (X[base + k * s.inner] - mu) * inv;
    }
  }
}

/// dx for y = (x - mean) * inv_std given dy.
template <typename T>
void normalize_backward(const Tensor<T>& Y, const std::vector<T>& inv_std, const AxisSplit& s, const T* dy, Tensor<T>& dx) {
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      T mean_dy = 0, mean_dy_y = 0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const std::size_t i = base + k * s.inner;
        mean_dy += dy[i];
        mean_dy_y += dy[i] * Y[i];
      }
      mean_dy /= static_cast<T>(s.n);
      mean_dy_y /= static_cast<T>(s.n);
      const T inv = inv_std[o * s.inner + in];
      for (std::size_t k = 0; k < s.n; ++k) {
        const std::size_t i = base + k * s.inner;
        dx[i] += inv * (dy[i] - mean_dy - Y[i] * mean_dy_y);
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> layer_norm(const Var<T>& x, std::int64_t axis_in, T eps) {
  check(eps > T(0), "layer_norm", "eps must be positive");
  const std::size_t axis = normalize_axis(axis_in, x.shape().size(), "layer_norm");
  const AxisSplit s = split_at(x.shape(), axis);
  Tensor<T> out(x.shape());
  auto inv_std = std::make_shared<std::vector<T>>();
  normalize_slices(x.value(), s, eps, out, *inv_std);
  return make_result<T>(std::move(out), {x}, [s, inv_std](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) normalize_backward(n.value, *inv_std, s, n.grad.data(), *g);
  });
}

template <typename T>
Var<T> layer_norm_affine(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  check(eps > T(0), "layer_norm", "eps must be positive");
  const std::size_t axis = x.shape().size() - 1;
  const AxisSplit s = split_at(x.shape(), axis);
  check(gamma.numel() == s.n && beta.numel() == s.n, "layer_norm", "gamma/beta must match the last axis");
  auto normalized = std::make_shared<Tensor<T>>(x.shape());
  auto inv_std = std::make_shared<std::vector<T>>();
  normalize_slices(x.value(), s, eps, *normalized, *inv_std);
  Tensor<T> out(x.shape());
  const auto& G = gamma.value();
  const auto& Bt = beta.value();
  for (std::size_t r = 0; r < s.outer; ++r) {
    for (std::size_t j = 0; j < s.n; ++j) out[r * s.n + j] = G[j] * (*normalized)[r * s.n + j] + Bt[j];
  }
  return make_result<T>(std::move(out), {x, gamma, beta}, [s, normalized, inv_std](Node<T>& n) {
    const auto& G = n.inputs[1]->value;
    const auto& Y = *normalized;
    if (auto* gg = input_grad(n, 1)) {
      for (std::size_t r = 0; r < s.outer; ++r) {
        for (std::size_t j = 0; j < s.n; ++j) (*gg)[j] += n.grad[r * s.n + j] * Y[r * s.n + j];
      }
    }
    if (auto* gb = input_grad(n, 2)) {
      for (std::size_t r = 0; r < s.outer; ++r) {
        for (std::size_t j = 0; j < s.n; ++j) (*gb)[j] += n.grad[r * s.n + j];
      }
    }
    if (auto* gx = input_grad(n, 0)) {
      std::vector<T> dy(n.grad.numel());
      for (std::size_t r = 0; r < s.outer; ++r) {
        for (std::size_t j = 0; j < s.n; ++j) dy[r * s.n + j] = n.grad[r * s.n + j] * G[j];
      }
      normalize_backward(Y, *inv_std, s, dy.data(), *gx);
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  check(x.dim(1) == weight.dim(0), "linear", shape_to_string(x.shape()) + " x " + shape_to_string(weight.shape()));
  check(bias.numel() == static_cast<std::size_t>(weight.dim(1)), "linear", "bias length must equal out features");
  const std::int64_t m = x.dim(0), n_out = weight.dim(1);
  Tensor<T> out(Shape{m, n_out});
  auto Y = as_matrix(out);
  Y.noalias() = as_matrix(x.value()) * as_matrix(weight.value());
  Y.rowwise() += ConstMapRow<T>(bias.value().data(), n_out);
  return make_result<T>(std::move(out), {x, weight, bias}, [](Node<T>& n) {
    const auto& X = n.inputs[0]->value;
    const auto& W = n.inputs[1]->value;
    const auto dY = as_matrix(n.grad);
    if (auto* gx = input_grad(n, 0)) as_matrix(*gx).noalias() += dY * as_matrix(W).transpose();
    if (auto* gw = input_grad(n, 1)) as_matrix(*gw).noalias() += as_matrix(X).transpose() * dY;
    if (auto* gb = input_grad(n, 2)) MapRow<T>(gb->data(), dY.cols()) += dY.colwise().sum();
  });
}

template <typename T>
Var<T> embedding_sum(const Var<T>& table, const std::vector<std::int64_t>& indices, std::size_t per_row) {
  require_matrix(table, "embedding");
  check(per_row > 0 && indices.size() % per_row == 0, "embedding", "index count must be a multiple of per_row");
  const std::int64_t vocab = table.dim(0);
  const std::size_t d = static_cast<std::size_t>(table.dim(1));
  const std::size_t rows = indices.size() / per_row;
  for (auto idx : indices) check(idx >= -1 && idx < vocab, "embedding", "index " + std::to_string(idx) + " out of range");
  Tensor<T> out(Shape{static_cast<std::int64_t>(rows), static_cast<std::int64_t>(d)});
  const auto& W = table.value();
  for (std::size_t r = 0; r < rows; ++r) {
    T* dst = out.data() + r * d;
    for (std::size_t k = 0; k < per_row; ++k) {
      const auto idx = indices[r * per_row + k];
      if (idx < 0) continue;
      const T* src = W.data() + static_cast<std::size_t>(idx) * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  }
  return make_result<T>(std::move(out), {table}, [indices, per_row, d](Node<T>& n) {
    auto* g = input_grad(n, 0);
    if (!g) return;
    const std::size_t rows = indices.size() / per_row;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* src = n.grad.data() + r * d;
      for (std::size_t k = 0; k < per_row; ++k) {
        const auto idx = indices[r * per_row + k];
        if (idx < 0) continue;
        T* dst = g->data() + static_cast<std::size_t>(idx) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  });
}

template <typename T>
Var<T> embedding_lookup(const Var<T>& table, const std::vector<std::int64_t>& indices) {
  return embedding_sum(table, indices, 1);
}

template <typename T>
Var<T> gather_rows(const Var<T>& x, const std::vector<std::int64_t>& indices) {
  require_matrix(x, "gather_rows");
  return embedding_sum(x, indices, 1);
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::int64_t axis_in) {
  check(!parts.empty(), "concat", "no inputs");
  const Shape& ref = parts.front().shape();
  const std::size_t axis = normalize_axis(axis_in, ref.size(), "concat");
  Shape out_shape = ref;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    check(p.shape().size() == ref.size(), "concat", "rank mismatch");
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (i != axis) check(p.shape()[i] == ref[i], "concat", "non-axis dimensions differ");
    }
    out_shape[axis] += p.shape()[axis];
  }
  const AxisSplit s = split_at(out_shape, axis);
  Tensor<T> out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t len = static_cast<std::size_t>(p.shape()[axis]) * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(p.value().data() + o * len, len, out.data() + o * s.n * s.inner + offset);
    }
    offset += len;
  }
  std::vector<std::size_t> lengths;
  for (const auto& p : parts) lengths.push_back(static_cast<std::size_t>(p.shape()[axis]) * s.inner);
  return make_result<T>(std::move(out), parts, [s, offsets, lengths](Node<T>& n) {
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      auto* g = input_grad(n, k);
      if (!g) continue;
      for (std::size_t o = 0; o < s.outer; ++o) {
        const T* src = n.grad.data() + o * s.n * s.inner + offsets[k];
        T* dst = g->data() + o * lengths[k];
        for (std::size_t j = 0; j < lengths[k]; ++j) dst[j] += src[j];
      }
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  check(shape_numel(shape) == x.numel(), "reshape", shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  return make_result<T>(x.value().reshaped(std::move(shape)), {x}, [](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[i];
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = 0;
  for (auto v : x.value().values()) total += v;
  return make_result<T>(Tensor<T>::scalar(total), {x}, [](Node<T>& n) {
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += n.grad[0];
    }
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  check(x.numel() > 0, "mean", "empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Var<T> masked_mean_rows(const Var<T>& x, const Mask& row_mask, std::size_t group_len) {
  require_matrix(x, "masked_mean_rows");
  const std::size_t rows = static_cast<std::size_t>(x.dim(0)), d = static_cast<std::size_t>(x.dim(1));
  check(group_len > 0 && rows % group_len == 0, "masked_mean_rows", "rows must be a multiple of group_len");
  check(row_mask.size() == rows, "masked_mean_rows", "mask length must equal row count");
  const std::size_t groups = rows / group_len;
  std::vector<T> weight(rows, T(0));
  for (std::size_t g = 0; g < groups; ++g) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < group_len; ++i) count += row_mask[g * group_len + i] ? 1 : 0;
    for (std::size_t i = 0; i < group_len; ++i) {
      if (row_mask[g * group_len + i]) weight[g * group_len + i] = T(1) / static_cast<T>(count);
    }
  }
  Tensor<T> out(Shape{static_cast<std::int64_t>(groups), static_cast<std::int64_t>(d)});
  const auto& X = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_mask[r]) continue;
    T* dst = out.data() + (r / group_len) * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += weight[r] * X[r * d + j];
  }
  return make_result<T>(std::move(out), {x}, [weight, group_len, d](Node<T>& n) {
    auto* g = input_grad(n, 0);
    if (!g) return;
    for (std::size_t r = 0; r < weight.size(); ++r) {
      if (weight[r] == T(0)) continue;
      const T* src = n.grad.data() + (r / group_len) * d;
      for (std::size_t j = 0; j < d; ++j) (*g)[r * d + j] += weight[r] * src[j];
    }
  });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  require_matrix(pred, "mse_loss");
  check(pred.shape() == target.shape(), "mse_loss", shape_to_string(pred.shape()) + " vs " + shape_to_string(target.shape()));
  const std::size_t B = static_cast<std::size_t>(pred.dim(0));
  check(B > 0, "mse_loss", "empty batch");
  T total = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const T e = pred.value()[i] - target.value()[i];
    total += e * e;
  }
  const T inv_b = T(1) / static_cast<T>(B);
  return make_result<T>(Tensor<T>::scalar(total * inv_b), {pred, target}, [inv_b](Node<T>& n) {
    const auto& P = n.inputs[0]->value;
    const auto& Y = n.inputs[1]->value;
    const T g0 = n.grad[0] * T(2) * inv_b;
    if (auto* g = input_grad(n, 0)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += g0 * (P[i] - Y[i]);
    }
    if (auto* g = input_grad(n, 1)) {
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] -= g0 * (P[i] - Y[i]);
    }
  });
}

// ---------------------------------------------------------------------------
// Attention

template <typename T>
Var<T> multi_head_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionLayout& layout,
                            const Mask& key_mask, AttentionCapture<T>* capture, EmptyRowPolicy policy) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  const std::size_t G = layout.groups, L = layout.seq_len, H = layout.heads;
  const std::size_t rows = G * L;
  const std::size_t d = static_cast<std::size_t>(q.dim(1));
  const std::size_t dv = static_cast<std::size_t>(v.dim(1));
  check(static_cast<std::size_t>(q.dim(0)) == rows && static_cast<std::size_t>(k.dim(0)) == rows &&
            static_cast<std::size_t>(v.dim(0)) == rows,
        "attention", "Q/K/V rows must equal groups * seq_len");
  check(static_cast<std::size_t>(k.dim(1)) == d, "attention", "Q and K widths differ");
  check(H > 0 && d % H == 0 && dv % H == 0, "attention", "width must be divisible by head count");
  check(key_mask.empty() || key_mask.size() == rows, "attention", "mask length must equal row count");
  const std::size_t dh = d / H, dvh = dv / H;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  auto live = [&](std::size_t r) { return key_mask.empty() || key_mask[r] != 0; };

  auto probs = std::make_shared<std::vector<T>>(G * H * L * L, T(0));
  Tensor<T> out(Shape{static_cast<std::int64_t>(rows), static_cast<std::int64_t>(dv)});
  const T* Q = q.value().data();
  const T* K = k.value().data();
  const T* V = v.value().data();
  std::size_t empty_rows = 0;
  std::vector<std::size_t> keys;
  std::vector<T> scores(L);

  for (std::size_t g = 0; g < G; ++g) {
    keys.clear();
    for (std::size_t j = 0; j < L; ++j) {
      if (live(g * L + j)) keys.push_back(j);
    }
    if (keys.empty()) {
      // Fully padded sequence: no query has a key to attend to.
      empty_rows += L * H;
      if (policy == EmptyRowPolicy::Throw) fail(ErrorCode::EmptyMaskRow, "attention row with every key masked");
      continue;
    }
    for (std::size_t h = 0; h < H; ++h) {
      T* P = probs->data() + (g * H + h) * L * L;
      for (std::size_t i = 0; i < L; ++i) {
        if (!live(g * L + i)) continue;
        const T* qi = Q + (g * L + i) * d + h * dh;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t jj = 0; jj < keys.size(); ++jj) {
          const T* kj = K + (g * L + keys[jj]) * d + h * dh;
          T s = 0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          s *= inv_sqrt;
          scores[jj] = s;
          mx = std::max(mx, s);
        }
        T total = 0;
        for (std::size_t jj = 0; jj < keys.size(); ++jj) {
          scores[jj] = std::exp(scores[jj] - mx);
          total += scores[jj];
        }
        T* oi = out.data() + (g * L + i) * dv + h * dvh;
        for (std::size_t jj = 0; jj < keys.size(); ++jj) {
          const T p = scores[jj] / total;
          P[i * L + keys[jj]] = p;
          const T* vj = V + (g * L + keys[jj]) * dv + h * dvh;
          for (std::size_t c = 0; c < dvh; ++c) oi[c] += p * vj[c];
        }
      }
    }
  }
  if (capture) {
    capture->weights = *probs;
    capture->layout = layout;
    capture->empty_rows = empty_rows;
  }

  return make_result<T>(std::move(out), {q, k, v}, [probs, layout, d, dv, key_mask](Node<T>& n) {
    const std::size_t G = layout.groups, L = layout.seq_len, H = layout.heads;
    const std::size_t dh = d / H, dvh = dv / H;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    const T* Q = n.inputs[0]->value.data();
    const T* K = n.inputs[1]->value.data();
    const T* V = n.inputs[2]->value.data();
    Tensor<T>* gq = input_grad(n, 0);
    Tensor<T>* gk = input_grad(n, 1);
    Tensor<T>* gv = input_grad(n, 2);
    auto live = [&](std::size_t r) { return key_mask.empty() || key_mask[r] != 0; };
    std::vector<T> dp(L);
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t h = 0; h < H; ++h) {
        const T* P = probs->data() + (g * H + h) * L * L;
        for (std::size_t i = 0; i < L; ++i) {
          if (!live(g * L + i)) continue;
          const T* doi = n.grad.data() + (g * L + i) * dv + h * dvh;
          T dot = 0;
          for (std::size_t j = 0; j < L; ++j) {
            const T p = P[i * L + j];
            if (p == T(0)) {
              dp[j] = 0;
              continue;
            }
            const T* vj = V + (g * L + j) * dv + h * dvh;
            T s = 0;
            for (std::size_t c = 0; c < dvh; ++c) s += doi[c] * vj[c];
            dp[j] = s;
            dot += p * s;
            if (gv) {
              T* gvj = gv->data() + (g * L + j) * dv + h * dvh;
              for (std::size_t c = 0; c < dvh; ++c) gvj[c] += p * doi[c];
            }
          }
          const T* qi = Q + (g * L + i) * d + h * dh;
          for (std::size_t j = 0; j < L; ++j) {
            const T p = P[i * L + j];
            if (p == T(0)) continue;
            const T ds = p * (dp[j] - dot) * inv_sqrt;
            const T* kj = K + (g * L + j) * d + h * dh;
            if (gq) {
              T* gqi = gq->data() + (g * L + i) * d + h * dh;
              for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
            }
            if (gk) {
              T* gkj = gk->data() + (g * L + j) * d + h * dh;
              for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
            }
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> scaled_dot_product_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const Mask& mask,
                                    std::size_t* empty_rows, EmptyRowPolicy policy) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  const std::size_t L = static_cast<std::size_t>(q.dim(0)), S = static_cast<std::size_t>(k.dim(0));
  const std::size_t d = static_cast<std::size_t>(q.dim(1)), dv = static_cast<std::size_t>(v.dim(1));
  check(static_cast<std::size_t>(k.dim(1)) == d, "attention", "Q and K widths differ");
  check(static_cast<std::size_t>(v.dim(0)) == S, "attention", "K and V rows differ");
  check(mask.empty() || mask.size() == L * S, "attention", "mask must be [L,S]");
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d));

  auto probs = std::make_shared<Tensor<T>>(Shape{static_cast<std::int64_t>(L), static_cast<std::int64_t>(S)});
  Tensor<T> out(Shape{static_cast<std::int64_t>(L), static_cast<std::int64_t>(dv)});
  std::size_t empties = 0;
  const auto Qm = as_matrix(q.value());
  const auto Km = as_matrix(k.value());
  const auto Vm = as_matrix(v.value());
  for (std::size_t i = 0; i < L; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    std::vector<T> s(S);
    for (std::size_t j = 0; j < S; ++j) {
      if (!mask.empty() && !mask[i * S + j]) continue;
      s[j] = Qm.row(static_cast<Eigen::Index>(i)).dot(Km.row(static_cast<Eigen::Index>(j))) * inv_sqrt;
      mx = std::max(mx, s[j]);
      any = true;
    }
    if (!any) {
      ++empties;
      if (policy == EmptyRowPolicy::Throw) fail(ErrorCode::EmptyMaskRow, "attention row with every key masked");
      continue;
    }
    T total = 0;
    for (std::size_t j = 0; j < S; ++j) {
      if (!mask.empty() && !mask[i * S + j]) continue;
      s[j] = std::exp(s[j] - mx);
      total += s[j];
    }
    for (std::size_t j = 0; j < S; ++j) {
      if (!mask.empty() && !mask[i * S + j]) continue;
      (*probs)[i * S + j] = s[j] / total;
    }
  }
  if (empty_rows) *empty_rows = empties;
  as_matrix(out).noalias() = as_matrix(*probs) * Vm;

  return make_result<T>(std::move(out), {q, k, v}, [probs, inv_sqrt](Node<T>& n) {
    const auto P = as_matrix(*probs);
    const auto Qm = as_matrix(n.inputs[0]->value);
    const auto Km = as_matrix(n.inputs[1]->value);
    const auto Vm = as_matrix(n.inputs[2]->value);
    const auto dO = as_matrix(n.grad);
    if (auto* gv = input_grad(n, 2)) as_matrix(*gv).noalias() += P.transpose() * dO;
    RowMatrix<T> dP = dO * Vm.transpose();
    RowMatrix<T> dS = P.array() * (dP.colwise() - (dP.array() * P.array()).rowwise().sum().matrix()).array();
    dS *= inv_sqrt;
    if (auto* gq = input_grad(n, 0)) as_matrix(*gq).noalias() += dS * Km;
    if (auto* gk = input_grad(n, 1)) as_matrix(*gk).noalias() += dS.transpose() * Qm;
  });
}

#define SVGNET_INSTANTIATE(T)                                                                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                                        \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                           \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                           \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                           \
  template Var<T> scale(const Var<T>&, T);                                                                     \
  template Var<T> add_row(const Var<T>&, const Var<T>&);                                                       \
  template Var<T> relu(const Var<T>&);                                                                         \
  template Var<T> softmax(const Var<T>&, std::int64_t);                                                        \
  template Var<T> layer_norm(const Var<T>&, std::int64_t, T);                                                  \
  template Var<T> layer_norm_affine(const Var<T>&, const Var<T>&, const Var<T>&, T);                           \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                                         \
  template Var<T> embedding_lookup(const Var<T>&, const std::vector<std::int64_t>&);                           \
  template Var<T> embedding_sum(const Var<T>&, const std::vector<std::int64_t>&, std::size_t);                 \
  template Var<T> concat(const std::vector<Var<T>>&, std::int64_t);                                            \
  template Var<T> gather_rows(const Var<T>&, const std::vector<std::int64_t>&);                                \
  template Var<T> reshape(const Var<T>&, Shape);                                                               \
  template Var<T> sum(const Var<T>&);                                                                          \
  template Var<T> mean(const Var<T>&);                                                                         \
  template Var<T> masked_mean_rows(const Var<T>&, const Mask&, std::size_t);                                   \
  template Var<T> mse_loss(const Var<T>&, const Var<T>&);                                                      \
  template Var<T> multi_head_attention(const Var<T>&, const Var<T>&, const Var<T>&, const AttentionLayout&,    \
                                       const Mask&, AttentionCapture<T>*, EmptyRowPolicy);                     \
  template Var<T> scaled_dot_product_attention(const Var<T>&, const Var<T>&, const Var<T>&, const Mask&,       \
                                               std::size_t*, EmptyRowPolicy);

SVGNET_INSTANTIATE(float)
SVGNET_INSTANTIATE(double)

#undef SVGNET_INSTANTIATE

}  // namespace svgnet::nn
