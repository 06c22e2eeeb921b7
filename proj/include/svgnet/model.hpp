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

// SVG-Net: per-path transformer scene encoder, residual-MLP history encoder,
// transformer fusion decoder with speed profiler and final MLP.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "svgnet/nn.hpp"
#include "svgnet/scene.hpp"

namespace svgnet::model {

enum class InputMode { HistOnly, HistScene, HistSceneAgents };

/// "hist", "hist+scene", "hist+scene+agents".
const char* to_string(InputMode mode);
InputMode parse_input_mode(const std::string& text);

struct ModelConfig {
  std::size_t d_model = 256;
  std::size_t d_history = 40;
  std::size_t d_latent = 64;
  std::size_t d_final = 128;
  std::size_t d_out = 60;
  std::size_t d_speed = 64;
  std::size_t d_ff = 512;
  std::size_t n_layers = 4;
  std::size_t n_heads = 8;
  std::size_t history_blocks = 4;
  std::size_t decoder_blocks = 3;
  int t_obs = 20;
  int t_pred = 30;
  scene::BatchCaps caps{};
  InputMode input_mode = InputMode::HistSceneAgents;
  /// Metres per unit at the network boundary; histories are divided by it
  /// and predictions multiplied.
  double position_scale = 10.0;
  std::uint64_t init_seed = 1;

  /// Throws ConfigError on inconsistent sizes.
  void validate() const;

  static ModelConfig tiny();
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep defaults; unknown keys raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

enum class ElementKind { ScenePath, OtherAgent, MainAgent };

struct AttentionEntry {
  std::string key;
  ElementKind kind = ElementKind::ScenePath;
  double score = 0.0;
  bool masked = true;
};

/// Main-agent query row of the last fusion layer, averaged over heads.
struct AttentionRecord {
  std::vector<std::vector<AttentionEntry>> samples;
};

template <typename T>
struct ForwardResult {
  nn::Var<T> predictions;  // [B, d_out], metres in the agent frame
  std::optional<AttentionRecord> attention;
};

template <typename T>
struct SceneEncoding {
  nn::Var<T> latents;   // [B * N_P, d_latent]
  nn::Mask path_mask;   // [B * N_P]
};

template <typename T>
class SvgNet {
 public:
  explicit SvgNet(const ModelConfig& config);

  SvgNet(const SvgNet&) = delete;
  SvgNet& operator=(const SvgNet&) = delete;
  SvgNet(SvgNet&&) = default;
  SvgNet& operator=(SvgNet&&) = default;

  const ModelConfig& config() const { return config_; }
  void set_input_mode(InputMode mode) { config_.input_mode = mode; }
  nn::ParameterSet<T>& parameters() { return params_; }
  const nn::ParameterSet<T>& parameters() const { return params_; }

  /// One latent per path; fully padded paths give zero latents.
  SceneEncoding<T> encode_scene(const scene::Batch& batch) const;

  /// histories [n, d_history] in metres -> latents [n, d_latent].
  nn::Var<T> encode_history(const nn::Var<T>& histories) const;

  ForwardResult<T> forward(const scene::Batch& batch, bool record_attention = false) const;

 private:
  ModelConfig config_;
  nn::ParameterSet<T> params_;

  // scene encoder
  nn::Var<T> kind_embedding_;  // [6, d_model]
  nn::Var<T> arg_embedding_;   // [6 * 257, d_model]
  nn::TransformerEncoder<T> scene_transformer_;
  nn::Linear<T> scene_pool_;
  nn::Tensor<T> positional_;   // [N_C, d_model]

  // history encoder
  nn::Linear<T> history_in_;
  nn::ResidualStack<T> history_blocks_;
  nn::Linear<T> history_out_;

  // decoder
  nn::Var<T> type_embedding_;  // [3, d_model]
  nn::Linear<T> decoder_in_;
  nn::TransformerEncoder<T> fusion_transformer_;
  nn::ResidualStack<T> decoder_blocks_;
  nn::Linear<T> speed_in_, speed_out_;
  nn::Linear<T> final1_, final2_, final3_;
};

/// Throws RecordingDisabled when the forward pass did not record attention.
template <typename T>
const AttentionRecord& extract_attention(const ForwardResult<T>& result) {
  if (!result.attention) fail(ErrorCode::RecordingDisabled, "forward pass was run without attention recording");
  return *result.attention;
}

template <typename T>
const AttentionRecord& extract_attention(ForwardResult<T>&&) = delete;

/// Sinusoidal encoding over positions [rows, width].
template <typename T>
nn::Tensor<T> sinusoidal_encoding(std::size_t rows, std::size_t width);

}  // namespace svgnet::model
