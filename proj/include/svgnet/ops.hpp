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

// Differentiable operations. Matrices are row-major rank-2 tensors.

#include <cstdint>
#include <vector>

#include "svgnet/tensor.hpp"

namespace svgnet::nn {

using Mask = std::vector<unsigned char>;

/// Additive penalty on masked logits. Masked keys are excluded outright,
/// which is exactly what exp(-LARGE) produces in finite precision.
inline constexpr double kMaskLarge = 1e9;

template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& x, T factor);
/// x[m,n] + row[n] broadcast over rows.
template <typename T> Var<T> add_row(const Var<T>& x, const Var<T>& row);
template <typename T> Var<T> relu(const Var<T>& x);
template <typename T> Var<T> softmax(const Var<T>& x, std::int64_t axis = -1);
/// Normalizes along `axis` to zero mean and unit variance (biased variance).
template <typename T> Var<T> layer_norm(const Var<T>& x, std::int64_t axis = -1, T eps = T(1e-5));
/// Last-axis layer norm followed by gamma * x + beta.
template <typename T>
Var<T> layer_norm_affine(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));
/// x[m,k] W[k,n] + b[n].
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);
/// Rows of table[V,d]; index -1 yields a zero row.
template <typename T> Var<T> embedding_lookup(const Var<T>& table, const std::vector<std::int64_t>& indices);
/// Row r of the result is the sum of table rows indices[r*per_row .. r*per_row+per_row-1].
template <typename T>
Var<T> embedding_sum(const Var<T>& table, const std::vector<std::int64_t>& indices, std::size_t per_row);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, std::int64_t axis);
/// Rows of x[m,d] in the given order; index -1 yields a zero row.
template <typename T> Var<T> gather_rows(const Var<T>& x, const std::vector<std::int64_t>& indices);
template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);

/// Mean over the unmasked rows of each group: x[G*L, d] -> [G, d]. Groups with
/// no unmasked row pool to zero.
template <typename T> Var<T> masked_mean_rows(const Var<T>& x, const Mask& row_mask, std::size_t group_len);

/// Per-sample sum of squared errors, mean over rows: pred/target [B, D].
template <typename T> Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

enum class EmptyRowPolicy { Throw, ZeroAndFlag };

struct AttentionLayout {
  std::size_t groups = 1;   // independent sequences
  std::size_t seq_len = 1;  // rows per sequence
  std::size_t heads = 1;
};

template <typename T>
struct AttentionCapture {
  /// [groups][heads][query][key], zero at masked keys.
  std::vector<T> weights;
  AttentionLayout layout;
  std::size_t empty_rows = 0;

  T weight(std::size_t g, std::size_t h, std::size_t q, std::size_t k) const {
    const std::size_t L = layout.seq_len;
    return weights[((g * layout.heads + h) * L + q) * L + k];
  }
};

/// Multi-head scaled dot-product attention over `groups` independent
/// sequences packed as rows of Q, K, V [groups*seq_len, d]. Heads split the
/// columns. key_mask [groups*seq_len] (empty = all keys valid) also marks
/// which query rows are live; masked query rows produce zeros.
template <typename T>
Var<T> multi_head_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionLayout& layout,
                            const Mask& key_mask, AttentionCapture<T>* capture = nullptr,
                            EmptyRowPolicy policy = EmptyRowPolicy::Throw);

/// Single-head attention: softmax(Q K^T / sqrt(d) + (mask - 1) LARGE) V with
/// Q[L,d], K[S,d], V[S,dv] and mask [L,S] (or empty). Rows with every key
/// masked yield zeros and are counted in *empty_rows, or throw EmptyMaskRow.
template <typename T>
Var<T> scaled_dot_product_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const Mask& mask = {},
                                    std::size_t* empty_rows = nullptr,
                                    EmptyRowPolicy policy = EmptyRowPolicy::Throw);

}  // namespace svgnet::nn
