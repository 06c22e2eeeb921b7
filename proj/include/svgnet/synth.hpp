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

// Synthetic lane networks with lane-following agents. Scenes mix straight
// roads, roads curving just after the observation window and junction forks,
// and can place a slower lead vehicle that forces the main agent to brake.

#include <cstdint>
#include <filesystem>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "svgnet/scene.hpp"

namespace svgnet::synth {

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_scenes = 2200;
  /// Trailing scenes reserved for the test split.
  std::size_t n_test = 200;
  std::size_t min_lanes = 2;
  std::size_t max_lanes = 6;
  double lane_spacing = 3.5;
  // relative weights of the geometry mix
  double straight_weight = 0.25;
  double arc_weight = 0.4;
  double fork_weight = 0.35;
  std::size_t min_agents = 1;
  std::size_t max_agents = 8;
  double min_speed = 5.0;
  double max_speed = 15.0;
  double speed_noise = 0.1;  // m/s per frame
  double max_accel = 0.5;    // m/s^2, main agent without a lead
  double lead_probability = 0.5;
  double frame_rate = 10.0;
  int total_frames = 50;
  int t_obs = 20;

  void validate() const;

  std::pair<std::size_t, std::size_t> train_range() const { return {0, n_scenes - n_test}; }
  std::pair<std::size_t, std::size_t> test_range() const { return {n_scenes - n_test, n_scenes}; }
};

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Deterministic per (config.seed, index).
scene::SceneRecord generate_scene(const SynthConfig& config, std::size_t index);

/// Writes the JSONL records to out_path and the manifest next to it
/// (out_path with ".manifest.json" appended).
void generate_dataset(const SynthConfig& config, const std::filesystem::path& out_path);

std::filesystem::path manifest_path_for(const std::filesystem::path& out_path);

/// Shortest distance from p to any segment of the polylines.
double distance_to_polylines(svg::Vec2 p, const std::vector<scene::Polyline>& polylines);

}  // namespace svgnet::synth
