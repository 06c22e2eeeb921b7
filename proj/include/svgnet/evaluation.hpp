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

// Displacement metrics, miss rate, the constant-velocity baseline and
// dataset-level reports.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "svgnet/model.hpp"
#include "svgnet/scene.hpp"

namespace svgnet::eval {

using svg::Vec2;
using Trajectory = std::vector<Vec2>;

/// Mean Euclidean distance over all steps.
double ade(std::span<const Vec2> pred, std::span<const Vec2> gt);
/// Euclidean distance at the final step.
double fde(std::span<const Vec2> pred, std::span<const Vec2> gt);
/// Fraction of fdes strictly greater than threshold.
double miss_rate(std::span<const double> fdes, double threshold = 2.0);

/// Extrapolates the mean per-frame velocity over the last k_vel frames.
Trajectory constant_velocity_baseline(std::span<const Vec2> history, int t_pred = 30, int k_vel = 3);

struct SampleMetrics {
  std::string scene_id;
  double ade = 0.0;
  double fde = 0.0;
  bool miss = false;
};

struct MetricsReport {
  double ade = 0.0;
  double fde = 0.0;
  double miss_rate = 0.0;
  std::size_t n_samples = 0;
  std::vector<SampleMetrics> per_sample;
};

/// Returns predictions in each sample's normalized frame.
using Predictor = std::function<std::vector<Trajectory>(const std::vector<scene::NormalizedSample>&)>;

struct EvalConfig {
  double miss_threshold = 2.0;
  int k_vel = 3;
  int t_pred = 30;
};

/// Metrics in city-frame metres. Every sample must carry a target.
MetricsReport evaluate(const Predictor& predictor, const std::vector<scene::NormalizedSample>& samples,
                       const EvalConfig& config = {});

Predictor constant_velocity_predictor(int t_pred = 30, int k_vel = 3);
/// Returns the ground truth; used to validate the evaluation plumbing.
Predictor oracle_predictor();

template <typename T>
std::vector<Trajectory> predict(const model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& samples,
                                std::size_t batch_size = 32);

template <typename T>
Predictor model_predictor(const model::SvgNet<T>& model, std::size_t batch_size = 32);

/// Trajectory reshaped from a flat [2 * steps] row.
Trajectory unflatten(std::span<const double> row);

nlohmann::json to_json(const MetricsReport& report);
/// "scene_id,ade,fde,miss" rows with a header line.
std::string per_sample_csv(const MetricsReport& report);

}  // namespace svgnet::eval
