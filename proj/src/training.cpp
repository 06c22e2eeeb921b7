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

#include "svgnet/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "svgnet/checkpoint.hpp"
#include "svgnet/evaluation.hpp"
#include "svgnet/io.hpp"
#include "svgnet/ops.hpp"

namespace svgnet::train {

using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::ConfigError, "train." + m); };
  if (epochs == 0) bad("epochs must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (micro_batch == 0) bad("micro_batch must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) bad("lr_decay must lie in (0, 1]");
  if (!(decay_every_epochs > 0.0)) bad("decay_every_epochs must be positive");
  if (weight_decay < 0.0) bad("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("betas must lie in [0, 1)");
  if (!(eps > 0.0)) bad("eps must be positive");
  if (grad_clip && !(*grad_clip > 0.0)) bad("grad_clip must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["decay_every_epochs"] = c.decay_every_epochs;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["seed"] = c.seed;
  j["grad_clip"] = c.grad_clip ? nlohmann::json(*c.grad_clip) : nlohmann::json(nullptr);
  j["micro_batch"] = c.micro_batch;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  detail::ObjectReader r(j, "train");
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("lr", c.lr);
  r.get("lr_decay", c.lr_decay);
  r.get("decay_every_epochs", c.decay_every_epochs);
  r.get("weight_decay", c.weight_decay);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("eps", c.eps);
  r.get("seed", c.seed);
  if (const auto* clip = r.child("grad_clip"); clip && !clip->is_null()) {
    if (!clip->is_number()) fail(ErrorCode::ConfigError, "train.grad_clip must be a number or null");
    c.grad_clip = clip->get<double>();
  }
  r.get("micro_batch", c.micro_batch);
  r.finish();
  c.validate();
  return c;
}

double learning_rate(const TrainConfig& config, std::int64_t step, std::int64_t steps_per_epoch) {
  if (step < 0 || steps_per_epoch <= 0) fail(ErrorCode::ContractViolation, "step and steps_per_epoch out of range");
  const double period = config.decay_every_epochs * static_cast<double>(steps_per_epoch);
  const auto k = static_cast<int>(std::floor(static_cast<double>(step) / period));
  return config.lr * std::pow(config.lr_decay, k);
}

std::int64_t steps_per_epoch(std::size_t n_samples, std::size_t batch_size) {
  return static_cast<std::int64_t>((n_samples + batch_size - 1) / batch_size);
}

template <typename T>
AdamW<T>::AdamW(nn::ParameterSet<T>& params, const TrainConfig& config) : params_(params), config_(config) {
  for (const auto& p : params_.items()) {
    state_.m.emplace_back(p.var.shape());
    state_.v.emplace_back(p.var.shape());
  }
}

template <typename T>
void AdamW<T>::step(double lr) {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double b1 = config_.beta1, b2 = config_.beta2;
  auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& value = items[i].var.mutable_value();
    const auto& grad = items[i].var.grad();
    auto& m = state_.m[i];
    auto& v = state_.v[i];
    for (std::size_t j = 0; j < value.numel(); ++j) {
      const double g = grad[j];
      double p = value[j];
      p -= lr * config_.weight_decay * p;
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      p -= lr * (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
      value[j] = static_cast<T>(p);
    }
  }
}

template <typename T>
double clip_grad_norm(nn::ParameterSet<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params.items()) {
    for (const T g : p.var.grad().values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : params.items()) {
      for (T& g : p.var.mutable_grad().values()) g = static_cast<T>(g * f);
    }
  }
  return norm;
}

std::vector<double> flatten_targets(const std::vector<scene::NormalizedSample>& samples, int t_pred) {
  std::vector<double> out;
  out.reserve(samples.size() * 2 * static_cast<std::size_t>(t_pred));
  for (const auto& s : samples) {
    if (!s.target || s.target->size() != static_cast<std::size_t>(t_pred)) {
      fail(ErrorCode::InsufficientHistory, "scene '" + s.scene_id + "' has no complete future for training");
    }
    for (const auto& p : *s.target) {
      out.push_back(p.x);
      out.push_back(p.y);
    }
  }
  return out;
}

namespace {

template <typename T>
Var<T> chunk_loss(const model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& chunk) {
  const auto& cfg = model.config();
  const auto batch = scene::make_batch(chunk, cfg.caps, cfg.t_obs, cfg.t_pred);
  const auto flat = flatten_targets(chunk, cfg.t_pred);
  Tensor<T> target(nn::Shape{static_cast<std::int64_t>(chunk.size()), static_cast<std::int64_t>(cfg.d_out)});
  for (std::size_t i = 0; i < flat.size(); ++i) target[i] = static_cast<T>(flat[i]);
  const auto result = model.forward(batch);
  return nn::mse_loss(result.predictions, Var<T>::constant(std::move(target)));
}

template <typename T>
std::vector<scene::NormalizedSample> slice(const std::vector<scene::NormalizedSample>& v, std::size_t begin,
                                           std::size_t end) {
  return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

template <typename T>
double accumulate_gradients(model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& batch,
                            std::size_t micro_batch) {
  if (batch.empty()) fail(ErrorCode::EmptyInput, "training batch is empty");
  model.parameters().zero_grad();
  const double total = static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t start = 0; start < batch.size(); start += micro_batch) {
    const std::size_t end = std::min(batch.size(), start + micro_batch);
    const auto chunk = slice<T>(batch, start, end);
    nn::GradientTape<T> tape;
    Var<T> weighted;
    {
      nn::TapeScope<T> scope(tape);
      const Var<T> l = chunk_loss(model, chunk);
      weighted = nn::scale(l, static_cast<T>(static_cast<double>(chunk.size()) / total));
    }
    tape.backward(weighted);
    loss += static_cast<double>(weighted.item());
  }
  return loss;
}

template <typename T>
double batch_loss(const model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& batch,
                  std::size_t micro_batch) {
  if (batch.empty()) fail(ErrorCode::EmptyInput, "batch is empty");
  double loss = 0.0;
  for (std::size_t start = 0; start < batch.size(); start += micro_batch) {
    const std::size_t end = std::min(batch.size(), start + micro_batch);
    const auto chunk = slice<T>(batch, start, end);
    loss += static_cast<double>(chunk_loss(model, chunk).item()) * static_cast<double>(chunk.size());
  }
  return loss / static_cast<double>(batch.size());
}

nlohmann::json to_json(const EpochLog& log) {
  nlohmann::json j = nlohmann::json::object();
  j["epoch"] = log.epoch;
  j["step"] = log.step;
  j["lr"] = log.lr;
  j["loss"] = log.loss;
  j["val_ade"] = log.val_ade ? nlohmann::json(*log.val_ade) : nlohmann::json(nullptr);
  j["val_fde"] = log.val_fde ? nlohmann::json(*log.val_fde) : nlohmann::json(nullptr);
  return j;
}

template <typename T>
TrainResult train(model::SvgNet<T>& model, const std::vector<scene::NormalizedSample>& train_set,
                  const std::vector<scene::NormalizedSample>& val_set, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) fail(ErrorCode::EmptyInput, "training set is empty");
  flatten_targets(train_set, model.config().t_pred);

  AdamW<T> optimizer(model.parameters(), config);
  nn::Rng rng(config.seed);
  const std::int64_t spe = steps_per_epoch(train_set.size(), config.batch_size);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::string log_text;
  if (options.out_dir) io::ensure_directory(*options.out_dir);

  TrainResult result;
  std::int64_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    double lr = config.lr;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<scene::NormalizedSample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      lr = learning_rate(config, step, spe);
      const double loss = accumulate_gradients(model, batch, config.micro_batch);
      if (config.grad_clip) clip_grad_norm(model.parameters(), *config.grad_clip);
      optimizer.step(lr);
      epoch_loss += loss * static_cast<double>(batch.size());
      result.step_losses.push_back(loss);
      if (options.on_step) options.on_step(step, loss);
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    log.step = step;
    log.lr = lr;
    log.loss = epoch_loss / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      const auto report = eval::evaluate(eval::model_predictor(model), val_set, {.t_pred = model.config().t_pred});
      log.val_ade = report.ade;
      log.val_fde = report.fde;
    }
    result.epochs.push_back(log);
    if (options.out_dir) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03zu", epoch);
      save_checkpoint(*options.out_dir / name, model, &optimizer);
      log_text += to_json(log).dump() + "\n";
      io::write_file_atomic(*options.out_dir / "loss_log.jsonl", log_text);
    }
    if (options.on_epoch) options.on_epoch(log);
  }
  if (options.out_dir) save_checkpoint(*options.out_dir / "final", model, &optimizer);
  return result;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const model::SvgNet<T>& model, const AdamW<T>* optimizer) {
  io::ensure_directory(dir);
  io::write_file_atomic(dir / "config.json", model::to_json(model.config()).dump(2) + "\n");
  std::vector<nn::NamedTensor<T>> tensors;
  for (const auto& p : model.parameters().items()) tensors.push_back({p.name, &p.var.value()});
  nn::write_tensor_blob(dir / "manifest.json", dir / "params.bin", tensors);
  if (optimizer) {
    const auto& st = optimizer->state();
    std::vector<nn::NamedTensor<T>> moments;
    const auto& items = model.parameters().items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      moments.push_back({"m/" + items[i].name, &st.m[i]});
      moments.push_back({"v/" + items[i].name, &st.v[i]});
    }
    nn::write_tensor_blob(dir / "optimizer.json", dir / "optimizer.bin", moments, st.step);
  }
}

template <typename T>
model::SvgNet<T> load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(io::read_file(dir / "config.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, "bad checkpoint config '" + (dir / "config.json").string() + "': " + e.what());
  }
  model::SvgNet<T> net(model::model_config_from_json(cfg));
  const auto blob = nn::read_tensor_blob(dir / "manifest.json", dir / "params.bin");
  nn::assign_parameters(blob, net.parameters());
  return net;
}

template <typename T>
bool load_optimizer_state(const std::filesystem::path& dir, const nn::ParameterSet<T>& params,
                          OptimizerState<T>& state) {
  if (!std::filesystem::exists(dir / "optimizer.json")) return false;
  const auto blob = nn::read_tensor_blob(dir / "optimizer.json", dir / "optimizer.bin");
  nn::ParameterSet<T> moments;
  for (const auto& p : params.items()) {
    moments.add("m/" + p.name, Tensor<T>(p.var.shape()));
    moments.add("v/" + p.name, Tensor<T>(p.var.shape()));
  }
  nn::assign_parameters(blob, moments);
  state.m.clear();
  state.v.clear();
  const auto& items = moments.items();
  for (std::size_t i = 0; i < items.size(); i += 2) {
    state.m.push_back(items[i].var.value());
    state.v.push_back(items[i + 1].var.value());
  }
  state.step = blob.step < 0 ? 0 : blob.step;
  return true;
}

#define SVGNET_INSTANTIATE(T)                                                                                     \
  template class AdamW<T>;                                                                                        \
  template double clip_grad_norm<T>(nn::ParameterSet<T>&, double);                                                \
  template double accumulate_gradients<T>(model::SvgNet<T>&, const std::vector<scene::NormalizedSample>&,        \
                                          std::size_t);                                                           \
  template double batch_loss<T>(const model::SvgNet<T>&, const std::vector<scene::NormalizedSample>&,            \
                                std::size_t);                                                                     \
  template TrainResult train<T>(model::SvgNet<T>&, const std::vector<scene::NormalizedSample>&,                  \
                                const std::vector<scene::NormalizedSample>&, const TrainConfig&,                  \
                                const TrainOptions&);                                                             \
  template void save_checkpoint<T>(const std::filesystem::path&, const model::SvgNet<T>&, const AdamW<T>*);       \
  template model::SvgNet<T> load_checkpoint<T>(const std::filesystem::path&);                                    \
  template bool load_optimizer_state<T>(const std::filesystem::path&, const nn::ParameterSet<T>&,                \
                                        OptimizerState<T>&);

SVGNET_INSTANTIATE(float)
SVGNET_INSTANTIATE(double)

}  // namespace svgnet::train
