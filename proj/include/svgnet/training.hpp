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

// AdamW, the step-decay schedule and the training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "svgnet/model.hpp"
#include "svgnet/scene.hpp"

namespace svgnet::train {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  double lr_decay = 0.9;
  double decay_every_epochs = 2.5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  std::optional<double> grad_clip;
  /// Samples per forward pass; gradients are accumulated up to batch_size.
  std::size_t micro_batch = 8;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// lr * lr_decay^k with k = floor(step / (decay_every_epochs * steps_per_epoch)).
double learning_rate(const TrainConfig& config, std::int64_t step, std::int64_t steps_per_epoch);

/// Steps in one epoch with the last partial batch kept.
std::int64_t steps_per_epoch(std::size_t n_samples, std::size_t batch_size);

template <typename T>
struct OptimizerState {
  std::vector<nn::Tensor<T>> m;
  std::vector<nn::Tensor<T>> v;
  std::int64_t step = 0;
};

template <typename T>
class AdamW {
 public:
  AdamW(nn::ParameterSet<T>& params, const TrainConfig& config);

  /// Decoupled decay p -= lr*wd*p, then the bias-corrected Adam update.
  void step(double lr);

  OptimizerState<T>& state() { return state_; }
  const OptimizerState<T>& state() const { return state_; }

 private:
  nn::ParameterSet<T>& params_;
  TrainConfig config_;
  OptimizerState<T> state_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(nn::ParameterSet<T>& params, double max_norm);

/// Flattened targets [B, 2*t_pred] for samples that all carry targets.
std::vector<double> flatten_targets(const std::vector<scene::NormalizedSample>& samples, int t_pred);

/// Full-batch loss gradient accumulated over micro-batches into the
/// parameter grads (which are reset first). Returns the batch loss.
template <typename T>
double accumulate_gradients(model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& batch,
                            std::size_t micro_batch);

/// Current batch loss without gradients.
template <typename T>
double batch_loss(const model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& batch,
                  std::size_t micro_batch);

struct EpochLog {
  std::size_t epoch = 0;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_ade;
  std::optional<double> val_fde;
};

nlohmann::json to_json(const EpochLog& log);

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(std::int64_t step, double loss)> on_step;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;
};

/// Writes out_dir/epoch_NNN after every epoch, out_dir/final at the end and
/// appends one line per epoch to out_dir/loss_log.jsonl.
template <typename T>
TrainResult train(model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& train_set,
                  const std::vector<scene::NormalizedSample>& val_set, const TrainConfig& config,
                  const TrainOptions& options = {});

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const model::SvgNet<T>& model,
                     const AdamW<T>* optimizer = nullptr);

template <typename T>
model::SvgNet<T> load_checkpoint(const std::filesystem::path& dir);

/// Restores optimizer.json/optimizer.bin; returns false when absent.
template <typename T>
bool load_optimizer_state(const std::filesystem::path& dir, const nn::ParameterSet<T>& params,
                          OptimizerState<T>& state);

}  // namespace svgnet::train
