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

// Central finite-difference gradient checking against the tape.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "svgnet/nn.hpp"

namespace svgnet::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates checked per parameter; larger tensors are sampled
  /// (half from coordinates with nonzero analytic gradient).
  std::size_t max_coords_per_param = 256;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Relative error with denominator max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

/// `loss` builds a scalar from the current parameter values. It is called
/// once under a tape for the analytic gradient and then repeatedly without
/// recording for the (f(p+eps) - f(p-eps)) / (2 eps) estimates.
GradCheckResult grad_check(const std::function<Var<double>()>& loss, std::vector<Parameter<double>>& params,
                           const GradCheckOptions& options = {});

}  // namespace svgnet::nn
