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

// Dataset records, agent-centric normalization and padded batch assembly.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "svgnet/error.hpp"
#include "svgnet/svg.hpp"

namespace svgnet::scene {

using svg::Vec2;

struct TrackPoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct AgentTrack {
  std::string agent_id;
  std::vector<TrackPoint> positions;  // strictly increasing frames
  bool is_main = false;

  std::optional<Vec2> at_frame(int frame) const;
  friend bool operator==(const AgentTrack&, const AgentTrack&) = default;
};

using Polyline = std::vector<Vec2>;

struct SceneRecord {
  std::string scene_id;
  double frame_rate = 10.0;
  std::vector<Polyline> map_polylines;
  std::vector<AgentTrack> agents;  // exactly one is_main

  const AgentTrack& main_agent() const;
  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

/// One JSON object, no trailing newline. Field order is fixed so output is
/// byte-stable.
std::string record_to_json_line(const SceneRecord& record);

/// Validates one JSONL line against the record schema.
SceneRecord parse_record_line(std::string_view line, std::size_t line_no);

/// Either a record or the schema error for that line.
struct LoadedLine {
  std::size_t line_no = 0;
  std::optional<SceneRecord> record;
  std::optional<SchemaError> error;
};

/// Streams records from a JSONL file in file order. Blank lines are skipped.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  /// Returns false at end of file.
  bool next(LoadedLine& out);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

struct LoadedDataset {
  std::vector<SceneRecord> records;
  std::vector<SchemaError> errors;
};

LoadedDataset load_dataset(const std::filesystem::path& path);

/// Loads and throws the first schema error, if any.
std::vector<SceneRecord> load_dataset_strict(const std::filesystem::path& path);

struct PolylineConversion {
  svg::SvgDocument document;
  std::size_t degenerate_skipped = 0;
};

/// One MoveTo/LineTo path per polyline, split to max_commands. Paths with no
/// point inside the viewport are dropped.
PolylineConversion polylines_to_svg(const std::vector<Polyline>& polylines, const svg::Viewport& viewport,
                                    std::size_t max_commands = 30);

/// Clips a polyline to an axis-aligned viewport; returns the inside pieces.
std::vector<Polyline> clip_polyline(const Polyline& line, const svg::Viewport& viewport);

struct NormalizeConfig {
  int t_obs = 20;
  int t_pred = 30;
  int k_heading = 5;
  double view_extent = 100.0;
  double min_heading_displacement = 0.1;
  std::size_t max_commands = 30;
};

struct OtherAgentHistory {
  std::string agent_id;
  std::vector<Vec2> positions;  // t_obs entries, zero where invalid
  std::vector<bool> valid;      // t_obs entries
};

struct NormalizedSample {
  std::string scene_id;
  std::string main_agent_id;
  svg::SvgDocument scene_svg;
  std::vector<Vec2> main_history;  // t_obs entries, last is exactly (0,0)
  std::vector<OtherAgentHistory> other_histories;
  std::optional<std::vector<Vec2>> target;  // t_pred entries
  svg::Affine2 frame_to_city;
  double heading_rotation = 0.0;  // radians applied city -> frame
  bool heading_fallback = false;
};

/// Translates the main agent's last observed position to the origin and
/// rotates its recent heading onto +y. Near-stationary agents keep the
/// identity rotation.
NormalizedSample normalize_sample(const SceneRecord& record, const NormalizeConfig& config = {});

struct BatchCaps {
  std::size_t max_paths = 128;     // N_P
  std::size_t max_commands = 30;   // N_C
  std::size_t max_agents = 16;     // N_A
};

struct Batch {
  std::size_t batch_size = 0;
  BatchCaps caps;
  int t_obs = 20;
  int t_pred = 30;

  std::vector<svg::CommandVector> command_grid;  // B x N_P x N_C
  std::vector<unsigned char> path_mask;          // B x N_P
  std::vector<unsigned char> command_mask;       // B x N_P x N_C
  std::vector<double> main_history;              // B x 2*t_obs
  std::vector<double> agent_histories;           // B x N_A x 2*t_obs
  std::vector<unsigned char> agent_mask;         // B x N_A
  std::vector<unsigned char> agent_frame_mask;   // B x N_A x t_obs
  std::optional<std::vector<double>> targets;    // B x 2*t_pred

  std::vector<std::string> path_ids;   // B x N_P, empty when masked
  std::vector<std::string> agent_ids;  // B x N_A, empty when masked
  std::vector<std::string> scene_ids;  // B

  std::size_t history_dim() const { return static_cast<std::size_t>(2 * t_obs); }
  std::size_t output_dim() const { return static_cast<std::size_t>(2 * t_pred); }
};

/// One sample's paths in batch slot order: split to caps.max_commands, then
/// the nearest caps.max_paths kept. Split chunks get a ".k" id suffix.
std::vector<svg::SvgPath> batch_paths(const NormalizedSample& sample, const BatchCaps& caps);

Batch make_batch(const std::vector<NormalizedSample>& samples, const BatchCaps& caps, int t_obs = 20,
                 int t_pred = 30);

/// Converts one Argoverse-style forecasting CSV (TIMESTAMP, TRACK_ID,
/// OBJECT_TYPE, X, Y, CITY_NAME at 10 Hz) into a record. The map JSON maps
/// city names to polyline lists; polylines touching a 200 m box around the
/// main agent are kept.
SceneRecord import_argoverse_sequence(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& map_json_path);

/// Imports several sequences and writes them as a JSONL dataset.
void import_argoverse_csv(const std::vector<std::filesystem::path>& csv_paths,
                          const std::filesystem::path& map_json_path, const std::filesystem::path& out_path);

}  // namespace svgnet::scene
