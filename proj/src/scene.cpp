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

#include "svgnet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "svgnet/io.hpp"

namespace svgnet::scene {

using nlohmann::json;

std::optional<Vec2> AgentTrack::at_frame(int frame) const {
  const auto it = std::lower_bound(positions.begin(), positions.end(), frame,
                                   [](const TrackPoint& p, int f) { return p.frame < f; });
  if (it == positions.end() || it->frame != frame) return std::nullopt;
  return Vec2{it->x, it->y};
}

const AgentTrack& SceneRecord::main_agent() const {
  for (const auto& a : agents) {
    if (a.is_main) return a;
  }
  fail(ErrorCode::MissingMainAgent, "scene '" + scene_id + "' has no main agent");
}

// ---------------------------------------------------------------------------
// JSONL schema

std::string record_to_json_line(const SceneRecord& record) {
  json polylines = json::array();
  for (const auto& line : record.map_polylines) {
    json pts = json::array();
    for (const auto& p : line) pts.push_back({p.x, p.y});
    polylines.push_back(std::move(pts));
  }
  json agents = json::array();
  for (const auto& a : record.agents) {
    json pos = json::array();
    for (const auto& p : a.positions) pos.push_back({p.frame, p.x, p.y});
    json agent = json::object();
    agent["agent_id"] = a.agent_id;
    agent["is_main"] = a.is_main;
    agent["positions"] = std::move(pos);
    agents.push_back(std::move(agent));
  }
  json j = json::object();
  j["scene_id"] = record.scene_id;
  j["frame_rate"] = record.frame_rate;
  j["map_polylines"] = std::move(polylines);
  j["agents"] = std::move(agents);
  return j.dump();
}

namespace {

const json& require(const json& obj, const char* field, std::size_t line_no, const std::string& prefix = "") {
  const auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(line_no, prefix + field, "missing");
  return *it;
}

double finite_number(const json& v, std::size_t line_no, const std::string& field) {
  if (!v.is_number()) throw SchemaError(line_no, field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(line_no, field, "not finite");
  return d;
}

}  // namespace

SceneRecord parse_record_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(line_no, "<json>", e.what());
  }
  if (!j.is_object()) throw SchemaError(line_no, "<root>", "expected an object");

  SceneRecord rec;
  const auto& id = require(j, "scene_id", line_no);
  if (!id.is_string()) throw SchemaError(line_no, "scene_id", "expected a string");
  rec.scene_id = id.get<std::string>();

  rec.frame_rate = finite_number(require(j, "frame_rate", line_no), line_no, "frame_rate");
  if (rec.frame_rate <= 0) throw SchemaError(line_no, "frame_rate", "must be positive");

  const auto& polylines = require(j, "map_polylines", line_no);
  if (!polylines.is_array()) throw SchemaError(line_no, "map_polylines", "expected an array");
  for (const auto& pl : polylines) {
    if (!pl.is_array()) throw SchemaError(line_no, "map_polylines", "polyline must be an array");
    Polyline line_pts;
    line_pts.reserve(pl.size());
    for (const auto& p : pl) {
      if (!p.is_array() || p.size() != 2) throw SchemaError(line_no, "map_polylines", "point must be [x,y]");
      line_pts.push_back({finite_number(p[0], line_no, "map_polylines"), finite_number(p[1], line_no, "map_polylines")});
    }
    rec.map_polylines.push_back(std::move(line_pts));
  }

  const auto& agents = require(j, "agents", line_no);
  if (!agents.is_array()) throw SchemaError(line_no, "agents", "expected an array");
  int mains = 0;
  for (const auto& a : agents) {
    if (!a.is_object()) throw SchemaError(line_no, "agents", "agent must be an object");
    AgentTrack track;
    const auto& aid = require(a, "agent_id", line_no, "agents.");
    if (!aid.is_string()) throw SchemaError(line_no, "agents.agent_id", "expected a string");
    track.agent_id = aid.get<std::string>();
    const auto& is_main = require(a, "is_main", line_no, "agents.");
    if (!is_main.is_boolean()) throw SchemaError(line_no, "agents.is_main", "expected a boolean");
    track.is_main = is_main.get<bool>();
    mains += track.is_main ? 1 : 0;
    const auto& pos = require(a, "positions", line_no, "agents.");
    if (!pos.is_array()) throw SchemaError(line_no, "agents.positions", "expected an array");
    for (const auto& p : pos) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number_integer()) {
        throw SchemaError(line_no, "agents.positions", "entry must be [frame,x,y] with integer frame");
      }
      TrackPoint tp{p[0].get<int>(), finite_number(p[1], line_no, "agents.positions"),
                    finite_number(p[2], line_no, "agents.positions")};
      if (!track.positions.empty() && tp.frame <= track.positions.back().frame) {
        throw SchemaError(line_no, "agents.positions", "frames must be strictly increasing");
      }
      track.positions.push_back(tp);
    }
    rec.agents.push_back(std::move(track));
  }
  if (mains != 1) throw SchemaError(line_no, "agents.is_main", "exactly one main agent required");
  return rec;
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) fail(ErrorCode::IoError, "cannot open dataset '" + path.string() + "'");
}

bool DatasetReader::next(LoadedLine& out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    out = LoadedLine{};
    out.line_no = line_no_;
    try {
      out.record = parse_record_line(line, line_no_);
    } catch (const SchemaError& e) {
      out.error = e;
    }
    return true;
  }
  if (in_.bad()) fail(ErrorCode::IoError, "read failed for '" + path_.string() + "'");
  return false;
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
  LoadedDataset out;
  DatasetReader reader(path);
  LoadedLine line;
  while (reader.next(line)) {
    if (line.record) out.records.push_back(std::move(*line.record));
    if (line.error) out.errors.push_back(*line.error);
  }
  return out;
}

std::vector<SceneRecord> load_dataset_strict(const std::filesystem::path& path) {
  auto loaded = load_dataset(path);
  if (!loaded.errors.empty()) throw loaded.errors.front();
  return std::move(loaded.records);
}

// ---------------------------------------------------------------------------
// Geometry

std::vector<Polyline> clip_polyline(const Polyline& line, const svg::Viewport& vp) {
  std::vector<Polyline> pieces;
  Polyline current;
  auto flush = [&] {
    if (current.size() >= 2) pieces.push_back(std::move(current));
    current.clear();
  };
  const double xmin = vp.origin.x, xmax = vp.origin.x + vp.extent.x;
  const double ymin = vp.origin.y, ymax = vp.origin.y + vp.extent.y;

  if (line.size() == 1 && vp.contains(line[0])) return {};
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i], b = line[i + 1];
    const double dx = b.x - a.x, dy = b.y - a.y;
    double t0 = 0.0, t1 = 1.0;
    bool visible = true;
    // Liang-Barsky
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - xmin, xmax - a.x, a.y - ymin, ymax - a.y};
    for (int k = 0; k < 4 && visible; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) visible = false;
      } else {
        const double r = q[k] / p[k];
        if (p[k] < 0.0) {
          t0 = std::max(t0, r);
        } else {
          t1 = std::min(t1, r);
        }
        if (t0 > t1) visible = false;
      }
    }
    if (!visible) {
      flush();
      continue;
    }
    const Vec2 pa = t0 == 0.0 ? a : vp.clamp(Vec2{a.x + t0 * dx, a.y + t0 * dy});
    const Vec2 pb = t1 == 1.0 ? b : vp.clamp(Vec2{a.x + t1 * dx, a.y + t1 * dy});
    if (t0 > 0.0 || current.empty()) {
      flush();
      current.push_back(pa);
    }
    current.push_back(pb);
    if (t1 < 1.0) flush();
  }
  flush();
  return pieces;
}

PolylineConversion polylines_to_svg(const std::vector<Polyline>& polylines, const svg::Viewport& viewport,
                                    std::size_t max_commands) {
  PolylineConversion out;
  out.document.viewport = viewport;
  for (std::size_t i = 0; i < polylines.size(); ++i) {
    const auto& line = polylines[i];
    if (line.size() < 2) {
      ++out.degenerate_skipped;
      continue;
    }
    if (std::none_of(line.begin(), line.end(), [&](const Vec2& p) { return viewport.contains(p); })) continue;
    svg::SvgPath path;
    path.semantic_tag = svg::SemanticTag::Lane;
    path.commands.reserve(line.size());
    path.commands.push_back(svg::SvgCommand::move_to(line.front()));
    for (std::size_t k = 1; k < line.size(); ++k) path.commands.push_back(svg::SvgCommand::line_to(line[k]));
    auto chunks = svg::split_path(path, max_commands);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      chunks[c].id = "map" + std::to_string(i) + "_" + std::to_string(c);
      out.document.paths.push_back(std::move(chunks[c]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

NormalizedSample normalize_sample(const SceneRecord& record, const NormalizeConfig& config) {
  const AgentTrack& main = record.main_agent();
  const int t_obs = config.t_obs;
  if (config.k_heading < 1 || config.k_heading >= t_obs) {
    fail(ErrorCode::ContractViolation, "k_heading must lie in [1, t_obs)");
  }
  std::vector<Vec2> city_hist(static_cast<std::size_t>(t_obs));
  for (int f = 0; f < t_obs; ++f) {
    const auto p = main.at_frame(f);
    if (!p) {
      fail(ErrorCode::InsufficientHistory,
           "main agent of scene '" + record.scene_id + "' lacks observed frame " + std::to_string(f));
    }
    city_hist[static_cast<std::size_t>(f)] = *p;
  }

  NormalizedSample s;
  s.scene_id = record.scene_id;
  s.main_agent_id = main.agent_id;

  const Vec2 anchor = city_hist.back();
  const Vec2 prev = city_hist[static_cast<std::size_t>(t_obs - 1 - config.k_heading)];
  const double dx = anchor.x - prev.x, dy = anchor.y - prev.y;
  double rotation = 0.0;
  if (std::hypot(dx, dy) < config.min_heading_displacement) {
    s.heading_fallback = true;
  } else {
    rotation = std::numbers::pi / 2.0 - std::atan2(dy, dx);
  }
  s.heading_rotation = rotation;
  const double c = std::cos(rotation), sn = std::sin(rotation);
  auto to_frame = [&](Vec2 p) {
    const double tx = p.x - anchor.x, ty = p.y - anchor.y;
    return Vec2{c * tx - sn * ty, sn * tx + c * ty};
  };
  s.frame_to_city = svg::Affine2::translation(anchor).compose(svg::Affine2::rotation(-rotation));

  s.main_history.reserve(city_hist.size());
  for (const auto& p : city_hist) s.main_history.push_back(to_frame(p));

  std::vector<Vec2> target;
  for (int f = t_obs; f < t_obs + config.t_pred; ++f) {
    const auto p = main.at_frame(f);
    if (!p) break;
    target.push_back(to_frame(*p));
  }
  if (target.size() == static_cast<std::size_t>(config.t_pred)) s.target = std::move(target);

  for (const auto& agent : record.agents) {
    if (agent.is_main) continue;
    OtherAgentHistory h;
    h.agent_id = agent.agent_id;
    h.positions.assign(static_cast<std::size_t>(t_obs), Vec2{});
    h.valid.assign(static_cast<std::size_t>(t_obs), false);
    bool any = false;
    for (const auto& tp : agent.positions) {
      if (tp.frame < 0 || tp.frame >= t_obs) continue;
      h.positions[static_cast<std::size_t>(tp.frame)] = to_frame({tp.x, tp.y});
      h.valid[static_cast<std::size_t>(tp.frame)] = true;
      any = true;
    }
    if (any) s.other_histories.push_back(std::move(h));
  }

  const double half = config.view_extent / 2.0;
  const svg::Viewport viewport({-half, -half}, {config.view_extent, config.view_extent});
  std::vector<Polyline> clipped;
  for (const auto& line : record.map_polylines) {
    Polyline local;
    local.reserve(line.size());
    for (const auto& p : line) local.push_back(to_frame(p));
    for (auto& piece : clip_polyline(local, viewport)) clipped.push_back(std::move(piece));
  }
  s.scene_svg = polylines_to_svg(clipped, viewport, config.max_commands).document;
  return s;
}

// ---------------------------------------------------------------------------
// Batching

namespace {

double path_distance_to_origin(const svg::SvgPath& path) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cmd : path.commands) {
    const auto used = svg::used_slots(cmd.kind);
    for (int slot = 0; slot < svg::kNumArgs; slot += 2) {
      if (used[slot]) best = std::min(best, std::hypot(cmd.args[slot], cmd.args[slot + 1]));
    }
  }
  return best;
}

/// Indices of the `cap` smallest keys, returned in original order.
std::vector<std::size_t> keep_nearest(const std::vector<double>& distances, std::size_t cap) {
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  if (order.size() > cap) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
    order.resize(cap);
    std::sort(order.begin(), order.end());
  }
  return order;
}

}  // namespace

std::vector<svg::SvgPath> batch_paths(const NormalizedSample& sample, const BatchCaps& caps) {
  std::vector<svg::SvgPath> paths;
  for (std::size_t i = 0; i < sample.scene_svg.paths.size(); ++i) {
    const auto& p = sample.scene_svg.paths[i];
    if (p.commands.empty()) continue;
    auto chunks = svg::split_path(p, caps.max_commands);
    const std::string base = p.id.value_or("path" + std::to_string(i));
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      chunks[k].id = chunks.size() == 1 ? base : base + "." + std::to_string(k);
      paths.push_back(std::move(chunks[k]));
    }
  }
  std::vector<double> dist;
  dist.reserve(paths.size());
  for (const auto& p : paths) dist.push_back(path_distance_to_origin(p));
  std::vector<svg::SvgPath> out;
  for (const std::size_t i : keep_nearest(dist, caps.max_paths)) out.push_back(std::move(paths[i]));
  return out;
}

Batch make_batch(const std::vector<NormalizedSample>& samples, const BatchCaps& caps, int t_obs, int t_pred) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "make_batch needs at least one sample");
  if (caps.max_paths == 0 || caps.max_commands < 2 || caps.max_agents == 0) {
    fail(ErrorCode::ContractViolation, "batch caps must be positive (max_commands >= 2)");
  }
  const std::size_t B = samples.size(), NP = caps.max_paths, NC = caps.max_commands, NA = caps.max_agents;
  const std::size_t DH = static_cast<std::size_t>(2 * t_obs);
  const std::size_t DO = static_cast<std::size_t>(2 * t_pred);

  Batch batch;
  batch.batch_size = B;
  batch.caps = caps;
  batch.t_obs = t_obs;
  batch.t_pred = t_pred;
  batch.command_grid.assign(B * NP * NC, svg::CommandVector::pad());
  batch.path_mask.assign(B * NP, 0);
  batch.command_mask.assign(B * NP * NC, 0);
  batch.main_history.assign(B * DH, 0.0);
  batch.agent_histories.assign(B * NA * DH, 0.0);
  batch.agent_mask.assign(B * NA, 0);
  batch.agent_frame_mask.assign(B * NA * static_cast<std::size_t>(t_obs), 0);
  batch.path_ids.assign(B * NP, "");
  batch.agent_ids.assign(B * NA, "");
  batch.scene_ids.reserve(B);
  bool all_targets = true;

  for (std::size_t b = 0; b < B; ++b) {
    const auto& s = samples[b];
    batch.scene_ids.push_back(s.scene_id);
    if (s.main_history.size() != static_cast<std::size_t>(t_obs)) {
      fail(ErrorCode::ShapeMismatch, "main history length does not match t_obs");
    }

    const auto paths = batch_paths(s, caps);
    for (std::size_t slot = 0; slot < paths.size(); ++slot) {
      const auto& path = paths[slot];
      const std::size_t pi = b * NP + slot;
      batch.path_mask[pi] = 1;
      batch.path_ids[pi] = *path.id;
      for (std::size_t k = 0; k < path.commands.size(); ++k) {
        batch.command_grid[pi * NC + k] = svg::encode_command(path.commands[k], s.scene_svg.viewport);
        batch.command_mask[pi * NC + k] = 1;
      }
    }

    for (int t = 0; t < t_obs; ++t) {
      batch.main_history[b * DH + 2 * t] = s.main_history[static_cast<std::size_t>(t)].x;
      batch.main_history[b * DH + 2 * t + 1] = s.main_history[static_cast<std::size_t>(t)].y;
    }

    std::vector<double> agent_dist;
    for (const auto& h : s.other_histories) {
      std::optional<Vec2> last;
      for (int t = t_obs - 1; t >= 0 && !last; --t) {
        if (h.valid[static_cast<std::size_t>(t)]) last = h.positions[static_cast<std::size_t>(t)];
      }
      agent_dist.push_back(last ? std::hypot(last->x, last->y) : std::numeric_limits<double>::infinity());
    }
    const auto kept_agents = keep_nearest(agent_dist, NA);
    for (std::size_t slot = 0; slot < kept_agents.size(); ++slot) {
      const auto& h = s.other_histories[kept_agents[slot]];
      const std::size_t ai = b * NA + slot;
      batch.agent_mask[ai] = 1;
      batch.agent_ids[ai] = h.agent_id;
      for (int t = 0; t < t_obs; ++t) {
        if (!h.valid[static_cast<std::size_t>(t)]) continue;
        batch.agent_frame_mask[ai * static_cast<std::size_t>(t_obs) + static_cast<std::size_t>(t)] = 1;
        batch.agent_histories[ai * DH + 2 * static_cast<std::size_t>(t)] = h.positions[static_cast<std::size_t>(t)].x;
        batch.agent_histories[ai * DH + 2 * static_cast<std::size_t>(t) + 1] =
            h.positions[static_cast<std::size_t>(t)].y;
      }
    }

    if (!s.target || s.target->size() != static_cast<std::size_t>(t_pred)) all_targets = false;
  }

  if (all_targets) {
    std::vector<double> targets(B * DO);
    for (std::size_t b = 0; b < B; ++b) {
      for (int t = 0; t < t_pred; ++t) {
        targets[b * DO + 2 * static_cast<std::size_t>(t)] = (*samples[b].target)[static_cast<std::size_t>(t)].x;
        targets[b * DO + 2 * static_cast<std::size_t>(t) + 1] = (*samples[b].target)[static_cast<std::size_t>(t)].y;
      }
    }
    batch.targets = std::move(targets);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Argoverse-style CSV import

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double_cell(const std::string& cell, std::size_t line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(line_no, column, "bad number '" + cell + "'");
  }
}

}  // namespace

SceneRecord import_argoverse_sequence(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& map_json_path) {
  constexpr double kFramePeriod = 0.1;
  constexpr int kTObs = 20;
  constexpr double kMapHalfBox = 100.0;

  std::istringstream in(io::read_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::SchemaError, "empty CSV '" + csv_path.string() + "'");
  const auto header = split_csv_line(line);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(1, name, "missing CSV column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_ts = column("TIMESTAMP"), c_id = column("TRACK_ID"), c_type = column("OBJECT_TYPE"),
                    c_x = column("X"), c_y = column("Y"), c_city = column("CITY_NAME");

  struct Row {
    double t, x, y;
  };
  std::map<std::string, std::vector<Row>> tracks;
  std::vector<std::string> track_order;
  std::string main_id;
  std::string city;
  std::vector<double> stamps;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) throw SchemaError(line_no, "<row>", "too few columns");
    const double t = parse_double_cell(cells[c_ts], line_no, "TIMESTAMP");
    const std::string& id = cells[c_id];
    if (!tracks.count(id)) track_order.push_back(id);
    tracks[id].push_back({t, parse_double_cell(cells[c_x], line_no, "X"), parse_double_cell(cells[c_y], line_no, "Y")});
    if (cells[c_type] == "AGENT") main_id = id;
    if (city.empty()) city = cells[c_city];
    stamps.push_back(t);
  }
  if (main_id.empty()) fail(ErrorCode::MissingMainAgent, "no AGENT row in '" + csv_path.string() + "'");

  std::sort(stamps.begin(), stamps.end());
  stamps.erase(std::unique(stamps.begin(), stamps.end()), stamps.end());
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    const double dt = stamps[i] - stamps[i - 1];
    if (std::abs(dt - kFramePeriod) > 0.1 * kFramePeriod) {
      fail(ErrorCode::BadTimestampGrid, "timestamp step " + std::to_string(dt) + " s deviates more than 10% from 0.1 s");
    }
  }
  auto frame_of = [&](double t) {
    return static_cast<int>(std::lower_bound(stamps.begin(), stamps.end(), t) - stamps.begin());
  };

  SceneRecord rec;
  rec.scene_id = csv_path.stem().string();
  rec.frame_rate = 1.0 / kFramePeriod;
  // Main agent first, others in order of first appearance.
  std::stable_partition(track_order.begin(), track_order.end(), [&](const std::string& id) { return id == main_id; });
  for (const auto& id : track_order) {
    auto rows = tracks[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    AgentTrack track;
    track.agent_id = id;
    track.is_main = id == main_id;
    for (const auto& r : rows) {
      const int f = frame_of(r.t);
      if (!track.positions.empty() && track.positions.back().frame == f) continue;
      track.positions.push_back({f, r.x, r.y});
    }
    rec.agents.push_back(std::move(track));
  }

  const auto& main = rec.agents.front();
  Vec2 center{main.positions.back().x, main.positions.back().y};
  if (auto p = main.at_frame(kTObs - 1)) center = *p;

  const json map = json::parse(io::read_file(map_json_path), nullptr, false);
  if (map.is_discarded() || !map.is_object()) fail(ErrorCode::SchemaError, "map JSON must be an object of cities");
  if (const auto it = map.find(city); it != map.end()) {
    try {
      for (const auto& pl : *it) {
        Polyline line_pts;
        bool near = false;
        for (const auto& p : pl) {
          const Vec2 v{p.at(0).get<double>(), p.at(1).get<double>()};
          near = near || (std::abs(v.x - center.x) <= kMapHalfBox && std::abs(v.y - center.y) <= kMapHalfBox);
          line_pts.push_back(v);
        }
        if (near) rec.map_polylines.push_back(std::move(line_pts));
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaError, "map polylines for '" + city + "' must be [[x, y], ...] lists: " + e.what());
    }
  }
  return rec;
}

void import_argoverse_csv(const std::vector<std::filesystem::path>& csv_paths,
                          const std::filesystem::path& map_json_path, const std::filesystem::path& out_path) {
  std::string out;
  for (const auto& p : csv_paths) {
    out += record_to_json_line(import_argoverse_sequence(p, map_json_path));
    out += '\n';
  }
  io::write_file_atomic(out_path, out);
}

}  // namespace svgnet::scene
