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

// Parameters, initialization, and the layer building blocks.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "svgnet/ops.hpp"

namespace svgnet::nn {

/// mt19937_64 with distribution mappings that do not depend on the standard
/// library implementation, so seeded streams match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) std::swap(first[i - 1], first[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

inline double Rng::normal(double mean, double stddev) {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return mean + stddev * z;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
};

/// Owns a model's trainable tensors in registration order. Names are unique.
template <typename T>
class ParameterSet {
 public:
  Var<T> add(const std::string& name, Tensor<T> init) {
    if (index_.count(name)) fail(ErrorCode::ContractViolation, "duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    params_.push_back({name, Var<T>::leaf(std::move(init), true)});
    return params_.back().var;
  }

  std::vector<Parameter<T>>& items() { return params_; }
  const std::vector<Parameter<T>>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }

  Parameter<T>* find(const std::string& name) {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  void zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
  }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var.numel();
    return n;
  }

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
Tensor<T> xavier_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(Shape{static_cast<std::int64_t>(fan_in), static_cast<std::int64_t>(fan_out)});
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> normal_tensor(Rng& rng, Shape shape, double stddev) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

template <typename T>
struct Linear {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out], undefined without bias

  Linear() = default;
  Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true)
      : weight(params.add(name + ".weight", xavier_uniform<T>(rng, in, out))) {
    if (with_bias) bias = params.add(name + ".bias", Tensor<T>(Shape{static_cast<std::int64_t>(out)}));
  }

  Var<T> operator()(const Var<T>& x) const { return bias.defined() ? linear(x, weight, bias) : matmul(x, weight); }
};

template <typename T>
struct LayerNorm {
  Var<T> gamma;
  Var<T> beta;
  T eps = T(1e-5);

  LayerNorm() = default;
  LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t width)
      : gamma(params.add(name + ".gamma", Tensor<T>(Shape{static_cast<std::int64_t>(width)}, T(1)))),
        beta(params.add(name + ".beta", Tensor<T>(Shape{static_cast<std::int64_t>(width)}))) {}

  Var<T> operator()(const Var<T>& x) const { return layer_norm_affine(x, gamma, beta, eps); }
};

/// h + W2 relu(W1 h + b1) + b2.
template <typename T>
struct ResidualBlock {
  Linear<T> fc1, fc2;

  ResidualBlock() = default;
  ResidualBlock(ParameterSet<T>& params, const std::string& name, std::size_t width, Rng& rng)
      : fc1(params, name + ".fc1", width, width, rng), fc2(params, name + ".fc2", width, width, rng) {}

  Var<T> operator()(const Var<T>& h) const { return add(h, fc2(relu(fc1(h)))); }
};

template <typename T>
struct ResidualStack {
  std::vector<ResidualBlock<T>> blocks;

  ResidualStack() = default;
  ResidualStack(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t count, Rng& rng) {
    for (std::size_t i = 0; i < count; ++i) blocks.emplace_back(params, name + ".block" + std::to_string(i), width, rng);
  }

  Var<T> operator()(Var<T> h) const {
    for (const auto& b : blocks) h = b(h);
    return h;
  }
};

/// Pre-norm transformer encoder layer: multi-head self-attention followed by
/// a ReLU feed-forward block, each wrapped in a residual connection. The key
/// projection has no bias: softmax cancels it for every query.
template <typename T>
struct TransformerLayer {
  LayerNorm<T> ln_attn, ln_ff;
  Linear<T> wq, wk, wv, wo;
  Linear<T> ff1, ff2;
  std::size_t heads = 1;

  TransformerLayer() = default;
  TransformerLayer(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t ff_width,
                   std::size_t n_heads, Rng& rng)
      : ln_attn(params, name + ".ln_attn", width),
        ln_ff(params, name + ".ln_ff", width),
        wq(params, name + ".attn.wq", width, width, rng),
        wk(params, name + ".attn.wk", width, width, rng, false),
        wv(params, name + ".attn.wv", width, width, rng),
        wo(params, name + ".attn.wo", width, width, rng),
        ff1(params, name + ".ff1", width, ff_width, rng),
        ff2(params, name + ".ff2", ff_width, width, rng),
        heads(n_heads) {}

  Var<T> operator()(const Var<T>& x, std::size_t groups, std::size_t seq_len, const Mask& mask,
                    AttentionCapture<T>* capture = nullptr) const {
    const Var<T> h = ln_attn(x);
    const Var<T> a = multi_head_attention(wq(h), wk(h), wv(h), AttentionLayout{groups, seq_len, heads}, mask, capture);
    const Var<T> x1 = add(x, wo(a));
    return add(x1, ff2(relu(ff1(ln_ff(x1)))));
  }
};

template <typename T>
struct TransformerEncoder {
  std::vector<TransformerLayer<T>> layers;
  LayerNorm<T> ln_out;

  TransformerEncoder() = default;
  TransformerEncoder(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t ff_width,
                     std::size_t n_heads, std::size_t n_layers, Rng& rng) {
    for (std::size_t i = 0; i < n_layers; ++i) {
      layers.emplace_back(params, name + ".layer" + std::to_string(i), width, ff_width, n_heads, rng);
    }
    ln_out = LayerNorm<T>(params, name + ".ln_out", width);
  }

  /// `last_capture` receives the final layer's attention weights.
  Var<T> operator()(Var<T> x, std::size_t groups, std::size_t seq_len, const Mask& mask,
                    AttentionCapture<T>* last_capture = nullptr) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](x, groups, seq_len, mask, i + 1 == layers.size() ? last_capture : nullptr);
    }
    return ln_out(x);
  }
};

}  // namespace svgnet::nn
