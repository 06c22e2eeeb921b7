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

#include "svgnet/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "json_fields.hpp"

namespace svgnet::model {

using nn::Mask;
using nn::Shape;
using nn::Tensor;
using nn::Var;

const char* to_string(InputMode mode) {
  switch (mode) {
    case InputMode::HistOnly: return "hist";
    case InputMode::HistScene: return "hist+scene";
    case InputMode::HistSceneAgents: return "hist+scene+agents";
  }
  return "?";
}

InputMode parse_input_mode(const std::string& text) {
  if (text == "hist") return InputMode::HistOnly;
  if (text == "hist+scene") return InputMode::HistScene;
  if (text == "hist+scene+agents") return InputMode::HistSceneAgents;
  fail(ErrorCode::ConfigError, "input mode must be hist, hist+scene or hist+scene+agents, got '" + text + "'");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, "model config: " + what);
  };
  require(t_obs >= 2 && t_pred >= 1, "t_obs >= 2 and t_pred >= 1");
  require(d_history == static_cast<std::size_t>(2 * t_obs), "d_history must equal 2 * t_obs");
  require(d_out == static_cast<std::size_t>(2 * t_pred), "d_out must equal 2 * t_pred");
  require(n_heads > 0 && d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(d_model > 0 && d_latent > 0 && d_final > 0 && d_speed > 0 && d_ff > 0, "widths must be positive");
  require(n_layers > 0, "n_layers must be positive");
  require(caps.max_paths > 0 && caps.max_agents > 0 && caps.max_commands >= 2, "caps must be positive");
  require(position_scale > 0, "position_scale must be positive");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.d_model = 16;
  c.d_latent = 8;
  c.d_final = 16;
  c.d_speed = 8;
  c.d_ff = 32;
  c.n_layers = 1;
  c.n_heads = 1;
  c.history_blocks = 4;
  c.decoder_blocks = 3;
  c.caps = {4, 6, 2};
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},
          {"d_history", c.d_history},
          {"d_latent", c.d_latent},
          {"d_final", c.d_final},
          {"d_out", c.d_out},
          {"d_speed", c.d_speed},
          {"d_ff", c.d_ff},
          {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},
          {"history_blocks", c.history_blocks},
          {"decoder_blocks", c.decoder_blocks},
          {"t_obs", c.t_obs},
          {"t_pred", c.t_pred},
          {"max_paths", c.caps.max_paths},
          {"max_commands", c.caps.max_commands},
          {"max_agents", c.caps.max_agents},
          {"input_mode", to_string(c.input_mode)},
          {"position_scale", c.position_scale},
          {"init_seed", c.init_seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  detail::ObjectReader r(j, "model");
  r.get("d_model", c.d_model);
  r.get("d_history", c.d_history);
  r.get("d_latent", c.d_latent);
  r.get("d_final", c.d_final);
  r.get("d_out", c.d_out);
  r.get("d_speed", c.d_speed);
  r.get("d_ff", c.d_ff);
  r.get("n_layers", c.n_layers);
  r.get("n_heads", c.n_heads);
  r.get("history_blocks", c.history_blocks);
  r.get("decoder_blocks", c.decoder_blocks);
  r.get("t_obs", c.t_obs);
  r.get("t_pred", c.t_pred);
  r.get("max_paths", c.caps.max_paths);
  r.get("max_commands", c.caps.max_commands);
  r.get("max_agents", c.caps.max_agents);
  std::string mode = to_string(c.input_mode);
  r.get("input_mode", mode);
  c.input_mode = parse_input_mode(mode);
  r.get("position_scale", c.position_scale);
  r.get("init_seed", c.init_seed);
  r.finish();
  c.validate();
  return c;
}

template <typename T>
Tensor<T> sinusoidal_encoding(std::size_t rows, std::size_t width) {
  Tensor<T> pe(Shape{static_cast<std::int64_t>(rows), static_cast<std::int64_t>(width)});
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(pos) * freq;
      pe[pos * width + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

namespace {

constexpr std::size_t kBinsWithSentinel = svg::kNumBins + 1;
constexpr std::int64_t kSentinelIndex = svg::kNumBins;

template <typename T>
Var<T> constant_matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor<T> t(Shape{static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols)});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(values[i] * scale);
  return Var<T>::constant(std::move(t));
}

template <typename T>
Var<T> zeros(std::size_t rows, std::size_t cols) {
  return Var<T>::constant(Tensor<T>(Shape{static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols)}));
}

}  // namespace

template <typename T>
SvgNet<T>::SvgNet(const ModelConfig& config) : config_(config) {
  config_.validate();
  nn::Rng rng(config_.init_seed);
  const std::size_t dm = config_.d_model;
  const auto dm64 = static_cast<std::int64_t>(dm);

  kind_embedding_ = params_.add("scene_encoder.kind_embedding",
                                nn::normal_tensor<T>(rng, Shape{svg::kNumCommandKinds, dm64}, 0.02));
  arg_embedding_ = params_.add(
      "scene_encoder.arg_embedding",
      nn::normal_tensor<T>(rng, Shape{static_cast<std::int64_t>(svg::kNumArgs * kBinsWithSentinel), dm64}, 0.02));
  scene_transformer_ = nn::TransformerEncoder<T>(params_, "scene_encoder", dm, config_.d_ff, config_.n_heads,
                                                 config_.n_layers, rng);
  scene_pool_ = nn::Linear<T>(params_, "scene_encoder.pool", dm, config_.d_latent, rng);
  positional_ = sinusoidal_encoding<T>(config_.caps.max_commands, dm);

  history_in_ = nn::Linear<T>(params_, "history_encoder.input", config_.d_history, dm, rng);
  history_blocks_ = nn::ResidualStack<T>(params_, "history_encoder.residual", dm, config_.history_blocks, rng);
  history_out_ = nn::Linear<T>(params_, "history_encoder.output", dm, config_.d_latent, rng);

  type_embedding_ = params_.add("decoder.type_embedding", nn::normal_tensor<T>(rng, Shape{3, dm64}, 0.02));
  decoder_in_ = nn::Linear<T>(params_, "decoder.input", config_.d_latent, dm, rng);
  fusion_transformer_ =
      nn::TransformerEncoder<T>(params_, "decoder.fusion", dm, config_.d_ff, config_.n_heads, config_.n_layers, rng);
  decoder_blocks_ = nn::ResidualStack<T>(params_, "decoder.residual", dm, config_.decoder_blocks, rng);
  speed_in_ = nn::Linear<T>(params_, "decoder.speed_profiler.fc1", config_.d_history, config_.d_speed, rng);
  speed_out_ = nn::Linear<T>(params_, "decoder.speed_profiler.fc2", config_.d_speed, config_.d_speed, rng);
  final1_ = nn::Linear<T>(params_, "decoder.final.fc1", dm + config_.d_speed, config_.d_final, rng);
  final2_ = nn::Linear<T>(params_, "decoder.final.fc2", config_.d_final, config_.d_final, rng);
  final3_ = nn::Linear<T>(params_, "decoder.final.fc3", config_.d_final, config_.d_out, rng);
}

template <typename T>
SceneEncoding<T> SvgNet<T>::encode_scene(const scene::Batch& batch) const {
  const std::size_t B = batch.batch_size, NP = config_.caps.max_paths, NC = config_.caps.max_commands;
  if (batch.caps.max_paths != NP || batch.caps.max_commands != NC || batch.command_grid.size() != B * NP * NC) {
    fail(ErrorCode::ShapeMismatch, "batch command grid does not match model caps");
  }
  SceneEncoding<T> enc;
  enc.path_mask.assign(B * NP, 0);

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < B * NP; ++i) {
    bool any_command = false;
    for (std::size_t k = 0; k < NC && !any_command; ++k) any_command = batch.command_mask[i * NC + k] != 0;
    if (batch.path_mask[i] && any_command) {
      live.push_back(i);
      enc.path_mask[i] = 1;
    }
  }
  if (live.empty()) {
    enc.latents = zeros<T>(B * NP, config_.d_latent);
    return enc;
  }

  const std::size_t G = live.size(), dm = config_.d_model;
  std::vector<std::int64_t> kinds(G * NC), args(G * NC * svg::kNumArgs);
  Mask token_mask(G * NC, 0);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < NC; ++k) {
      const std::size_t src = live[g] * NC + k;
      const auto& cv = batch.command_grid[src];
      kinds[g * NC + k] = cv.kind_index;
      token_mask[g * NC + k] = batch.command_mask[src];
      for (int s = 0; s < svg::kNumArgs; ++s) {
        const int bin = cv.arg_bins[static_cast<std::size_t>(s)];
        args[(g * NC + k) * svg::kNumArgs + static_cast<std::size_t>(s)] =
            static_cast<std::int64_t>(s) * static_cast<std::int64_t>(kBinsWithSentinel) +
            (bin < 0 ? kSentinelIndex : bin);
      }
    }
  }
  Tensor<T> pe(Shape{static_cast<std::int64_t>(G * NC), static_cast<std::int64_t>(dm)});
  for (std::size_t g = 0; g < G; ++g) std::copy(positional_.data(), positional_.data() + NC * dm, pe.data() + g * NC * dm);

  Var<T> tokens = nn::add(nn::embedding_lookup(kind_embedding_, kinds), nn::embedding_sum(arg_embedding_, args, svg::kNumArgs));
  tokens = nn::add(tokens, Var<T>::constant(std::move(pe)));
  const Var<T> encoded = scene_transformer_(tokens, G, NC, token_mask);
  const Var<T> pooled = scene_pool_(nn::masked_mean_rows(encoded, token_mask, NC));

  std::vector<std::int64_t> scatter(B * NP, -1);
  for (std::size_t g = 0; g < G; ++g) scatter[live[g]] = static_cast<std::int64_t>(g);
  enc.latents = nn::gather_rows(pooled, scatter);
  return enc;
}

template <typename T>
Var<T> SvgNet<T>::encode_history(const Var<T>& histories) const {
  if (histories.shape().size() != 2 || static_cast<std::size_t>(histories.dim(1)) != config_.d_history) {
    fail(ErrorCode::ShapeMismatch, "history input must be [n, " + std::to_string(config_.d_history) + "]");
  }
  const Var<T> x = nn::scale(histories, static_cast<T>(1.0 / config_.position_scale));
  return history_out_(history_blocks_(history_in_(x)));
}

template <typename T>
ForwardResult<T> SvgNet<T>::forward(const scene::Batch& batch, bool record_attention) const {
  const std::size_t B = batch.batch_size, NP = config_.caps.max_paths, NA = config_.caps.max_agents;
  const std::size_t DH = config_.d_history;
  if (B == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  if (batch.caps.max_paths != NP || batch.caps.max_agents != NA || batch.caps.max_commands != config_.caps.max_commands) {
    fail(ErrorCode::ShapeMismatch, "batch caps do not match model caps");
  }
  if (batch.history_dim() != DH || batch.main_history.size() != B * DH || batch.agent_histories.size() != B * NA * DH) {
    fail(ErrorCode::ShapeMismatch, "batch history dimensions do not match model");
  }
  const bool use_scene = config_.input_mode != InputMode::HistOnly;
  const bool use_agents = config_.input_mode == InputMode::HistSceneAgents;
  const std::size_t E = NP + NA + 1;

  Mask element_mask(B * E, 0);
  Var<T> scene_latents;
  if (use_scene) {
    auto enc = encode_scene(batch);
    scene_latents = enc.latents;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t p = 0; p < NP; ++p) element_mask[b * E + p] = enc.path_mask[b * NP + p];
    }
  } else {
    scene_latents = zeros<T>(B * NP, config_.d_latent);
  }

  Var<T> agent_latents;
  if (use_agents) {
    agent_latents = encode_history(constant_matrix<T>(batch.agent_histories, B * NA, DH));
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t a = 0; a < NA; ++a) element_mask[b * E + NP + a] = batch.agent_mask[b * NA + a];
    }
  } else {
    agent_latents = zeros<T>(B * NA, config_.d_latent);
  }

  const Var<T> main_raw = constant_matrix<T>(batch.main_history, B, DH);
  const Var<T> main_latents = encode_history(main_raw);
  for (std::size_t b = 0; b < B; ++b) element_mask[b * E + E - 1] = 1;

  // Rows are stacked [scene | agents | main]; reorder to per-sample sequences.
  const Var<T> stacked = decoder_in_(nn::concat<T>({scene_latents, agent_latents, main_latents}, 0));
  std::vector<std::int64_t> order(B * E), types(B * E);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t p = 0; p < NP; ++p) {
      order[b * E + p] = static_cast<std::int64_t>(b * NP + p);
      types[b * E + p] = 0;
    }
    for (std::size_t a = 0; a < NA; ++a) {
      order[b * E + NP + a] = static_cast<std::int64_t>(B * NP + b * NA + a);
      types[b * E + NP + a] = 1;
    }
    order[b * E + E - 1] = static_cast<std::int64_t>(B * NP + B * NA + b);
    types[b * E + E - 1] = 2;
  }
  const Var<T> sequence = nn::add(nn::gather_rows(stacked, order), nn::embedding_lookup(type_embedding_, types));

  nn::AttentionCapture<T> capture;
  const Var<T> fused = fusion_transformer_(sequence, B, E, element_mask, record_attention ? &capture : nullptr);

  std::vector<std::int64_t> main_rows(B);
  for (std::size_t b = 0; b < B; ++b) main_rows[b] = static_cast<std::int64_t>(b * E + E - 1);
  const Var<T> relation = decoder_blocks_(nn::gather_rows(fused, main_rows));
  const Var<T> speed =
      speed_out_(nn::relu(speed_in_(nn::scale(main_raw, static_cast<T>(1.0 / config_.position_scale)))));
  const Var<T> h1 = nn::relu(final1_(nn::concat<T>({relation, speed}, 1)));
  const Var<T> h2 = nn::relu(final2_(h1));
  ForwardResult<T> result;
  result.predictions = nn::scale(final3_(h2), static_cast<T>(config_.position_scale));

  if (record_attention) {
    AttentionRecord record;
    const std::size_t H = config_.n_heads;
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<AttentionEntry> entries;
      entries.reserve(E);
      for (std::size_t e = 0; e < E; ++e) {
        AttentionEntry entry;
        if (e < NP) {
          entry.kind = ElementKind::ScenePath;
          entry.key = batch.path_ids[b * NP + e];
        } else if (e < NP + NA) {
          entry.kind = ElementKind::OtherAgent;
          entry.key = batch.agent_ids[b * NA + (e - NP)];
        } else {
          entry.kind = ElementKind::MainAgent;
          entry.key = "main";
        }
        entry.masked = element_mask[b * E + e] == 0;
        double score = 0.0;
        for (std::size_t h = 0; h < H; ++h) score += static_cast<double>(capture.weight(b, h, E - 1, e));
        entry.score = score / static_cast<double>(H);
        entries.push_back(std::move(entry));
      }
      record.samples.push_back(std::move(entries));
    }
    result.attention = std::move(record);
  }
  return result;
}

template class SvgNet<float>;
template class SvgNet<double>;
template Tensor<float> sinusoidal_encoding<float>(std::size_t, std::size_t);
template Tensor<double> sinusoidal_encoding<double>(std::size_t, std::size_t);

}  // namespace svgnet::model
