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

#include "svgnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace svgnet::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

std::vector<std::size_t> pick_coordinates(const Tensor<double>& grad, std::size_t cap, Rng& rng) {
  const std::size_t n = grad.numel();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n <= cap) return all;
  std::vector<std::size_t> nonzero, zero;
  for (std::size_t i = 0; i < n; ++i) (grad[i] != 0.0 ? nonzero : zero).push_back(i);
  rng.shuffle(nonzero.begin(), nonzero.end());
  rng.shuffle(zero.begin(), zero.end());
  std::vector<std::size_t> picked;
  const std::size_t from_nonzero = std::min(nonzero.size(), cap - std::min(zero.size(), cap / 2));
  picked.insert(picked.end(), nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(from_nonzero));
  const std::size_t from_zero = std::min(zero.size(), cap - picked.size());
  picked.insert(picked.end(), zero.begin(), zero.begin() + static_cast<std::ptrdiff_t>(from_zero));
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var<double>()>& loss, std::vector<Parameter<double>>& params,
                           const GradCheckOptions& options) {
  for (auto& p : params) p.var.zero_grad();
  {
    GradientTape<double> tape;
    TapeScope<double> scope(tape);
    const Var<double> value = loss();
    tape.backward(value);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& p : params) {
    const Tensor<double> analytic = p.var.grad();
    auto& values = p.var.mutable_value();
    for (const std::size_t i : pick_coordinates(analytic, options.max_coords_per_param, rng)) {
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = loss().item();
      values[i] = saved - options.eps;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double err = relative_error(analytic[i], numeric);
      ++result.coords_checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        if (err >= result.max_rel_error) {
          result.worst_param = p.name;
          result.worst_index = i;
          result.worst_analytic = analytic[i];
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace svgnet::nn
