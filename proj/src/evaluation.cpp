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

#include "svgnet/evaluation.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace svgnet::eval {

namespace {

void check_pair(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    fail(ErrorCode::ShapeMismatch, "prediction and ground truth must have the same nonzero length");
  }
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  check_pair(pred, gt);
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += distance(pred[t], gt[t]);
  return total / static_cast<double>(pred.size());
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  check_pair(pred, gt);
  return distance(pred.back(), gt.back());
}

double miss_rate(std::span<const double> fdes, double threshold) {
  if (fdes.empty()) fail(ErrorCode::EmptyInput, "miss_rate needs at least one sample");
  std::size_t misses = 0;
  for (const double f : fdes) misses += f > threshold ? 1 : 0;
  return static_cast<double>(misses) / static_cast<double>(fdes.size());
}

Trajectory constant_velocity_baseline(std::span<const Vec2> history, int t_pred, int k_vel) {
  if (k_vel < 1 || history.size() < static_cast<std::size_t>(k_vel) + 1 || history.size() < 2) {
    fail(ErrorCode::InsufficientHistory, "constant velocity needs at least k_vel + 1 observed frames");
  }
  const Vec2 last = history.back();
  const Vec2 prev = history[history.size() - 1 - static_cast<std::size_t>(k_vel)];
  const Vec2 v{(last.x - prev.x) / k_vel, (last.y - prev.y) / k_vel};
  Trajectory out;
  out.reserve(static_cast<std::size_t>(t_pred));
  for (int t = 1; t <= t_pred; ++t) out.push_back({last.x + t * v.x, last.y + t * v.y});
  return out;
}

MetricsReport evaluate(const Predictor& predictor, const std::vector<scene::NormalizedSample>& samples,
                       const EvalConfig& config) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "evaluation set is empty");
  for (const auto& s : samples) {
    if (!s.target || s.target->size() != static_cast<std::size_t>(config.t_pred)) {
      fail(ErrorCode::InsufficientHistory, "scene '" + s.scene_id + "' has no complete future for evaluation");
    }
  }
  const auto predictions = predictor(samples);
  if (predictions.size() != samples.size()) fail(ErrorCode::ShapeMismatch, "predictor returned wrong sample count");

  MetricsReport report;
  std::vector<double> fdes;
  double ade_sum = 0.0, fde_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    Trajectory pred_city, gt_city;
    for (const auto& p : predictions[i]) pred_city.push_back(s.frame_to_city.apply(p));
    for (const auto& p : *s.target) gt_city.push_back(s.frame_to_city.apply(p));
    SampleMetrics m;
    m.scene_id = s.scene_id;
    m.ade = ade(pred_city, gt_city);
    m.fde = fde(pred_city, gt_city);
    m.miss = m.fde > config.miss_threshold;
    ade_sum += m.ade;
    fde_sum += m.fde;
    fdes.push_back(m.fde);
    report.per_sample.push_back(std::move(m));
  }
  report.n_samples = samples.size();
  report.ade = ade_sum / static_cast<double>(samples.size());
  report.fde = fde_sum / static_cast<double>(samples.size());
  report.miss_rate = miss_rate(fdes, config.miss_threshold);
  return report;
}

Predictor constant_velocity_predictor(int t_pred, int k_vel) {
  return [t_pred, k_vel](const std::vector<scene::NormalizedSample>& samples) {
    std::vector<Trajectory> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(constant_velocity_baseline(s.main_history, t_pred, k_vel));
    return out;
  };
}

Predictor oracle_predictor() {
  return [](const std::vector<scene::NormalizedSample>& samples) {
    std::vector<Trajectory> out;
    for (const auto& s : samples) out.push_back(s.target.value_or(Trajectory{}));
    return out;
  };
}

Trajectory unflatten(std::span<const double> row) {
  Trajectory t;
  for (std::size_t i = 0; i + 1 < row.size(); i += 2) t.push_back({row[i], row[i + 1]});
  return t;
}

template <typename T>
std::vector<Trajectory> predict(const model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& samples,
                                std::size_t batch_size) {
  const auto& cfg = model.config();
  std::vector<Trajectory> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    const std::vector<scene::NormalizedSample> chunk(samples.begin() + static_cast<std::ptrdiff_t>(start),
                                                     samples.begin() + static_cast<std::ptrdiff_t>(end));
    const auto batch = scene::make_batch(chunk, cfg.caps, cfg.t_obs, cfg.t_pred);
    const auto result = model.forward(batch);
    const auto& values = result.predictions.value();
    const std::size_t D = cfg.d_out;
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      std::vector<double> row(D);
      for (std::size_t j = 0; j < D; ++j) row[j] = static_cast<double>(values[b * D + j]);
      out.push_back(unflatten(row));
    }
  }
  return out;
}

template <typename T>
Predictor model_predictor(const model::SvgNet<T>& model, std::size_t batch_size) {
  return [&model, batch_size](const std::vector<scene::NormalizedSample>& samples) {
    return predict(model, samples, batch_size);
  };
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"ade", r.ade}, {"fde", r.fde}, {"miss_rate", r.miss_rate}, {"n_samples", r.n_samples}};
}

std::string per_sample_csv(const MetricsReport& r) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "scene_id,ade,fde,miss\n";
  for (const auto& m : r.per_sample) ss << m.scene_id << ',' << m.ade << ',' << m.fde << ',' << (m.miss ? 1 : 0) << '\n';
  return ss.str();
}

template std::vector<Trajectory> predict<float>(const model::SvgNet<float>&, const std::vector<scene::NormalizedSample>&,
                                                std::size_t);
template std::vector<Trajectory> predict<double>(const model::SvgNet<double>&,
                                                 const std::vector<scene::NormalizedSample>&, std::size_t);
template Predictor model_predictor<float>(const model::SvgNet<float>&, std::size_t);
template Predictor model_predictor<double>(const model::SvgNet<double>&, std::size_t);

}  // namespace svgnet::eval
