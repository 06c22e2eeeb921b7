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

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "svgnet/gradcheck.hpp"
#include "svgnet/nn.hpp"

using namespace svgnet;
using namespace svgnet::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-scale, scale));
  return t;
}

bool bit_equal(const Tensor<double>& a, const Tensor<double>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

// Loss with non-degenerate gradients everywhere: output dotted with fixed weights.
Var<double> probe(const Var<double>& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, Var<double>::constant(random_tensor<double>(rng, out.shape()))));
}

}  // namespace

TEST_CASE("softmax") {
  const auto s = softmax(Var<double>::constant(Tensor<double>({3}, {0, 0, 0})));
  for (int i = 0; i < 3; ++i) CHECK(s.value()[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_tensor<float>(rng, {4, 7}, 20.0);
    const auto y = softmax(Var<float>::constant(x)).value();
    auto shifted = x;
    const float c = static_cast<float>(rng.uniform(-50, 50));
    for (auto& v : shifted.values()) v += c;
    const auto z = softmax(Var<float>::constant(shifted)).value();
    for (int r = 0; r < 4; ++r) {
      double total = 0;
      for (int k = 0; k < 7; ++k) {
        total += y[r * 7 + k];
        CHECK(std::abs(y[r * 7 + k] - z[r * 7 + k]) < 1e-6);
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
  // axis 0
  const auto col = softmax(Var<double>::constant(Tensor<double>({2, 2}, {0, 5, 0, 5})), 0).value();
  CHECK(col[0] == doctest::Approx(0.5));
  CHECK(col[1] == doctest::Approx(0.5));

  const auto big = softmax(Var<float>::constant(Tensor<float>({2}, {1e30f, -1e30f}))).value();
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == 1.0f);
}

TEST_CASE("layer_norm") {
  const auto y = layer_norm(Var<double>::constant(Tensor<double>({3}, {1, 2, 3})), -1, 1e-12).value();
  CHECK(y[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-9));
  CHECK(std::abs(y[1]) < 1e-12);
  CHECK(y[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-9));

  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng.index(30));
    const auto out = layer_norm(Var<double>::constant(random_tensor<double>(rng, {3, n}, 10.0))).value();
    for (int r = 0; r < 3; ++r) {
      double mean = 0, var = 0;
      for (std::int64_t k = 0; k < n; ++k) mean += out[r * n + k];
      mean /= n;
      for (std::int64_t k = 0; k < n; ++k) var += (out[r * n + k] - mean) * (out[r * n + k] - mean);
      var /= n;
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-4);
    }
  }
  // constant rows stay finite
  const auto flat = layer_norm(Var<float>::constant(Tensor<float>({4}, 7.0f))).value();
  for (auto v : flat.values()) CHECK(v == 0.0f);
}

TEST_CASE("attention with one unmasked key returns its value row") {
  Rng rng(3);
  const auto q = Var<double>::constant(random_tensor<double>(rng, {2, 4}));
  const auto k = Var<double>::constant(random_tensor<double>(rng, {3, 4}));
  const auto v = Var<double>::constant(random_tensor<double>(rng, {3, 5}));
  const Mask mask = {0, 1, 0, 0, 1, 0};
  const auto out = scaled_dot_product_attention(q, k, v, mask).value();
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 5; ++c) CHECK(out[r * 5 + c] == v.value()[5 + c]);
  }

  const Mask ones(6, 1);
  CHECK(bit_equal(scaled_dot_product_attention(q, k, v, ones).value(), scaled_dot_product_attention(q, k, v).value()));

  const Mask none = {0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(scaled_dot_product_attention(q, k, v, none), Error);
  std::size_t empty = 0;
  const auto zeroed = scaled_dot_product_attention(q, k, v, none, &empty, EmptyRowPolicy::ZeroAndFlag).value();
  CHECK(empty == 1);
  for (int c = 0; c < 5; ++c) CHECK(zeroed[c] == 0.0);
}

TEST_CASE("multi-head attention masking") {
  Rng rng(4);
  const AttentionLayout layout{2, 5, 2};
  const auto x = [&] { return Var<double>::constant(random_tensor<double>(rng, {10, 8})); };
  const auto q = x(), k = x(), v = x();
  const Mask ones(10, 1);
  CHECK(bit_equal(multi_head_attention(q, k, v, layout, ones).value(), multi_head_attention(q, k, v, layout, {}).value()));

  Mask mask(10, 1);
  mask[2] = mask[7] = mask[8] = 0;
  AttentionCapture<double> cap;
  const auto a = multi_head_attention(q, k, v, layout, mask, &cap).value();
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t qi = 0; qi < 5; ++qi) {
        if (!mask[g * 5 + qi]) continue;
        double total = 0;
        for (std::size_t ki = 0; ki < 5; ++ki) {
          if (!mask[g * 5 + ki]) CHECK(cap.weight(g, h, qi, ki) == 0.0);
          total += cap.weight(g, h, qi, ki);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
  // changing a masked row leaves everything bit-identical
  auto k2 = Var<double>::constant(k.value());
  auto v2 = Var<double>::constant(v.value());
  for (int c = 0; c < 8; ++c) {
    k2.mutable_value()[7 * 8 + c] += 3.0;
    v2.mutable_value()[7 * 8 + c] -= 9.0;
  }
  CHECK(bit_equal(multi_head_attention(q, k2, v2, layout, mask).value(), a));

  CHECK_THROWS_AS(multi_head_attention(q, k, v, AttentionLayout{2, 5, 3}, mask), Error);
}

TEST_CASE("shape mismatches") {
  const auto a = Var<double>::constant(Tensor<double>({2, 3}));
  const auto b = Var<double>::constant(Tensor<double>({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  CHECK_THROWS_AS(add(a, Var<double>::constant(Tensor<double>({3, 2}))), Error);
  CHECK_THROWS_AS(concat<double>({a, Var<double>::constant(Tensor<double>({2, 4}))}, 0), Error);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("concat, embedding lookup and gather") {
  const auto a = Var<double>::constant(Tensor<double>({2, 1}, {1, 2}));
  const auto b = Var<double>::constant(Tensor<double>({2, 2}, {3, 4, 5, 6}));
  CHECK(concat<double>({a, b}, 1).value().to_vector() == std::vector<double>{1, 3, 4, 2, 5, 6});
  CHECK(concat<double>({b, b}, 0).value().shape() == Shape{4, 2});

  const auto table = Var<double>::constant(Tensor<double>({3, 2}, {0, 1, 2, 3, 4, 5}));
  CHECK(embedding_lookup(table, {2, -1, 0}).value().to_vector() == std::vector<double>{4, 5, 0, 0, 0, 1});
  CHECK(embedding_sum(table, {0, 1, 2, -1}, 2).value().to_vector() == std::vector<double>{2, 4, 4, 5});
  CHECK(gather_rows(b, {1, -1}).value().to_vector() == std::vector<double>{5, 6, 0, 0});
}

TEST_CASE("backward of sum(W x)") {
  GradientTape<double> tape;
  TapeScope<double> scope(tape);
  auto w = Var<double>::leaf(Tensor<double>({2, 2}, {1, 2, 3, 4}));
  const auto x = Var<double>::constant(Tensor<double>({2, 1}, {5, 7}));
  const auto loss = sum(matmul(w, x));
  tape.backward(loss);
  CHECK(w.grad().to_vector() == std::vector<double>{5, 7, 5, 7});

  tape.backward(loss);
  CHECK(w.grad().to_vector() == std::vector<double>{10, 14, 10, 14});
}

TEST_CASE("unused parameters get zero gradients") {
  ParameterSet<double> params;
  auto used = params.add("used", Tensor<double>({3}, 1.0));
  auto unused = params.add("unused", Tensor<double>({4}, 2.0));
  GradientTape<double> tape;
  {
    TapeScope<double> scope(tape);
    tape.backward(sum(mul(used, used)));
  }
  CHECK(used.grad().to_vector() == std::vector<double>{2, 2, 2});
  for (auto g : unused.grad().values()) CHECK(g == 0.0);
  CHECK(unused.grad().shape() == unused.shape());
  CHECK_THROWS_AS(params.add("used", Tensor<double>({1})), Error);
}

TEST_CASE("backward rejects disconnected and non-scalar losses") {
  GradientTape<double> tape;
  auto w = Var<double>::leaf(Tensor<double>({2}, 1.0));
  const auto outside = sum(w);  // no tape active
  try {
    tape.backward(outside);
    FAIL("expected DisconnectedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DisconnectedLoss);
  }
  TapeScope<double> scope(tape);
  CHECK_THROWS_AS(tape.backward(mul(w, w)), Error);
}

TEST_CASE("grad_check of a quadratic") {
  ParameterSet<double> params;
  auto p = params.add("p", Tensor<double>::scalar(3.0));
  const auto r = grad_check([&] { return mul(p, p); }, params.items());
  CHECK(r.worst_analytic == doctest::Approx(6.0));
  CHECK(r.worst_numeric == doctest::Approx(6.0));
  CHECK(r.max_rel_error < 1e-8);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1.0, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("grad_check of elementary ops") {
  Rng rng(5);
  ParameterSet<double> params;
  auto a = params.add("a", random_tensor<double>(rng, {3, 4}));
  auto b = params.add("b", random_tensor<double>(rng, {4, 5}));
  auto row = params.add("row", random_tensor<double>(rng, {5}));
  auto table = params.add("table", random_tensor<double>(rng, {6, 5}));
  // keep relu inputs away from the kink
  Tensor<double> rinit({3, 5});
  for (auto& v : rinit.values()) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.01, 1.0);
  auto r = params.add("r", rinit);

  const auto check = [&](const std::function<Var<double>()>& f, std::uint64_t seed) {
    return grad_check([&] { return probe(f(), seed); }, params.items()).max_rel_error;
  };
  CHECK(check([&] { return matmul(a, b); }, 1) < 1e-4);
  CHECK(check([&] { return add_row(matmul(a, b), row); }, 2) < 1e-4);
  CHECK(check([&] { return softmax(matmul(a, b)); }, 3) < 1e-4);
  CHECK(check([&] { return softmax(matmul(a, b), 0); }, 4) < 1e-4);
  CHECK(check([&] { return layer_norm(matmul(a, b)); }, 5) < 1e-4);
  CHECK(check([&] { return layer_norm_affine(matmul(a, b), row, row); }, 6) < 1e-4);
  CHECK(check([&] { return relu(r); }, 7) < 1e-4);
  CHECK(check([&] { return concat<double>({matmul(a, b), r}, 0); }, 8) < 1e-4);
  CHECK(check([&] { return embedding_sum(table, {0, 3, 3, -1, 5, 1}, 2); }, 9) < 1e-4);
  CHECK(check([&] { return gather_rows(r, {2, -1, 0, 2}); }, 10) < 1e-4);
  CHECK(check([&] { return masked_mean_rows(r, {1, 0, 1}, 3); }, 11) < 1e-4);
  CHECK(check([&] { return mse_loss(r, add_row(matmul(a, b), row)); }, 12) < 1e-4);
  CHECK(check([&] { return scale(sub(r, mul(r, r)), 0.25); }, 13) < 1e-4);
}

TEST_CASE("grad_check of attention") {
  Rng rng(6);
  ParameterSet<double> params;
  auto q = params.add("q", random_tensor<double>(rng, {8, 6}));
  auto k = params.add("k", random_tensor<double>(rng, {8, 6}));
  auto v = params.add("v", random_tensor<double>(rng, {8, 6}));
  const Mask mask = {1, 1, 0, 1, 1, 0, 1, 1};
  const auto r = grad_check(
      [&] { return probe(multi_head_attention(q, k, v, AttentionLayout{2, 4, 3}, mask), 20); }, params.items());
  CHECK(r.max_rel_error < 1e-4);

  const Mask single = {1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 1, 1};
  auto q2 = params.add("q2", random_tensor<double>(rng, {3, 4}));
  auto k2 = params.add("k2", random_tensor<double>(rng, {4, 4}));
  auto v2 = params.add("v2", random_tensor<double>(rng, {4, 2}));
  const auto r2 = grad_check([&] { return probe(scaled_dot_product_attention(q2, k2, v2, single), 21); },
                             params.items());
  CHECK(r2.max_rel_error < 1e-4);
}

TEST_CASE("grad_check of composite layers") {
  Rng rng(7);
  {
    ParameterSet<double> params;
    ResidualBlock<double> block(params, "res", 6, rng);
    const auto x = Var<double>::constant(random_tensor<double>(rng, {5, 6}));
    CHECK(grad_check([&] { return probe(block(x), 30); }, params.items()).max_rel_error < 1e-4);
  }
  {
    ParameterSet<double> params;
    TransformerLayer<double> layer(params, "tl", 8, 16, 2, rng);
    const auto x = Var<double>::constant(random_tensor<double>(rng, {6, 8}));
    const Mask mask = {1, 1, 1, 0, 1, 1};
    CHECK(grad_check([&] { return probe(layer(x, 2, 3, mask), 31); }, params.items()).max_rel_error < 1e-4);
  }
  {
    ParameterSet<double> params;
    TransformerEncoder<double> enc(params, "enc", 8, 16, 2, 2, rng);
    const auto x = Var<double>::constant(random_tensor<double>(rng, {4, 8}));
    CHECK(grad_check([&] { return probe(enc(x, 1, 4, {}), 32); }, params.items()).max_rel_error < 1e-4);
  }
}

TEST_CASE("initialization and determinism") {
  Rng a(9), b(9);
  const auto w1 = xavier_uniform<double>(a, 30, 50);
  const auto w2 = xavier_uniform<double>(b, 30, 50);
  CHECK(bit_equal(w1, w2));
  const double bound = std::sqrt(6.0 / 80.0);
  for (auto v : w1.values()) CHECK(std::abs(v) <= bound);

  ParameterSet<double> p1, p2;
  Rng r1(4), r2(4);
  TransformerLayer<double> l1(p1, "t", 8, 16, 2, r1), l2(p2, "t", 8, 16, 2, r2);
  Rng in(5);
  const auto x = Var<double>::constant(random_tensor<double>(in, {6, 8}));
  CHECK(bit_equal(l1(x, 2, 3, {}).value(), l2(x, 2, 3, {}).value()));
}
