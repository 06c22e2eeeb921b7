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

// Top-level run configuration: one JSON object with optional "model",
// "train", "synth" and "eval" sections. Unknown keys are rejected.

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "svgnet/evaluation.hpp"
#include "svgnet/model.hpp"
#include "svgnet/synth.hpp"
#include "svgnet/training.hpp"

namespace svgnet {

struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  synth::SynthConfig synth;
  eval::EvalConfig eval;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
/// Parses and validates; malformed JSON is a ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace svgnet
