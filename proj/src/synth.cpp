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

#include "svgnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "svgnet/io.hpp"
#include "svgnet/nn.hpp"

namespace svgnet::synth {

using scene::Polyline;
using svg::Vec2;

void SynthConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::ConfigError, "synth." + m); };
  if (n_scenes == 0) bad("n_scenes must be positive");
  if (n_test > n_scenes) bad("n_test exceeds n_scenes");
  if (min_lanes == 0 || min_lanes > max_lanes) bad("lane counts must satisfy 0 < min_lanes <= max_lanes");
  if (min_agents == 0 || min_agents > max_agents) bad("agent counts must satisfy 0 < min_agents <= max_agents");
  if (!(lane_spacing > 0.0)) bad("lane_spacing must be positive");
  if (straight_weight < 0 || arc_weight < 0 || fork_weight < 0 || straight_weight + arc_weight + fork_weight <= 0) {
    bad("geometry weights must be non-negative with a positive sum");
  }
  if (!(min_speed > 0.0) || min_speed > max_speed) bad("speeds must satisfy 0 < min_speed <= max_speed");
  if (speed_noise < 0.0 || max_accel < 0.0) bad("speed_noise and max_accel must be non-negative");
  if (lead_probability < 0.0 || lead_probability > 1.0) bad("lead_probability must lie in [0, 1]");
  if (!(frame_rate > 0.0)) bad("frame_rate must be positive");
  if (t_obs < 6 || total_frames <= t_obs) bad("frames must satisfy 6 <= t_obs < total_frames");
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  j["seed"] = c.seed;
  j["n_scenes"] = c.n_scenes;
  j["n_test"] = c.n_test;
  j["min_lanes"] = c.min_lanes;
  j["max_lanes"] = c.max_lanes;
  j["lane_spacing"] = c.lane_spacing;
  j["straight_weight"] = c.straight_weight;
  j["arc_weight"] = c.arc_weight;
  j["fork_weight"] = c.fork_weight;
  j["min_agents"] = c.min_agents;
  j["max_agents"] = c.max_agents;
  j["min_speed"] = c.min_speed;
  j["max_speed"] = c.max_speed;
  j["speed_noise"] = c.speed_noise;
  j["max_accel"] = c.max_accel;
  j["lead_probability"] = c.lead_probability;
  j["frame_rate"] = c.frame_rate;
  j["total_frames"] = c.total_frames;
  j["t_obs"] = c.t_obs;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  detail::ObjectReader r(j, "synth");
  r.get("seed", c.seed);
  r.get("n_scenes", c.n_scenes);
  r.get("n_test", c.n_test);
  r.get("min_lanes", c.min_lanes);
  r.get("max_lanes", c.max_lanes);
  r.get("lane_spacing", c.lane_spacing);
  r.get("straight_weight", c.straight_weight);
  r.get("arc_weight", c.arc_weight);
  r.get("fork_weight", c.fork_weight);
  r.get("min_agents", c.min_agents);
  r.get("max_agents", c.max_agents);
  r.get("min_speed", c.min_speed);
  r.get("max_speed", c.max_speed);
  r.get("speed_noise", c.speed_noise);
  r.get("max_accel", c.max_accel);
  r.get("lead_probability", c.lead_probability);
  r.get("frame_rate", c.frame_rate);
  r.get("total_frames", c.total_frames);
  r.get("t_obs", c.t_obs);
  r.finish();
  c.validate();
  return c;
}

namespace {

struct Segment {
  double length;
  double curvature;
};
using Route = std::vector<Segment>;

struct Pose {
  double x = 0.0, y = 0.0, h = 0.0;
};

Pose advance(Pose p, double u, double k) {
  if (k == 0.0) return {p.x + std::cos(p.h) * u, p.y + std::sin(p.h) * u, p.h};
  const double h1 = p.h + k * u;
  return {p.x + (std::sin(h1) - std::sin(p.h)) / k, p.y + (std::cos(p.h) - std::cos(h1)) / k, h1};
}

double route_length(const Route& r) {
  double L = 0.0;
  for (const auto& s : r) L += s.length;
  return L;
}

Pose pose_at(const Route& route, Pose start, double s) {
  for (const auto& seg : route) {
    const double u = std::min(s, seg.length);
    start = advance(start, u, seg.curvature);
    s -= u;
    if (s <= 0.0) break;
  }
  if (s > 0.0) start = advance(start, s, 0.0);
  return start;
}

/// Samples the route at 1 m arc-length spacing over [s_begin, s_end], shifted
/// sideways by offset (positive to the left).
Polyline sample_route(const Route& route, Pose start, double s_begin, double s_end, double offset) {
  Polyline out;
  auto emit = [&](double s) {
    const Pose p = pose_at(route, start, s);
    out.push_back({p.x - std::sin(p.h) * offset, p.y + std::cos(p.h) * offset});
  };
  emit(s_begin);
  for (double s = s_begin + 1.0; s < s_end - 1e-9; s += 1.0) emit(s);
  emit(s_end);
  return out;
}

/// Arc-length parametrized walk along a polyline, clamped at its ends.
class Track {
 public:
  explicit Track(Polyline pts) : pts_(std::move(pts)), cum_(pts_.size(), 0.0) {
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      cum_[i] = cum_[i - 1] + std::hypot(pts_[i].x - pts_[i - 1].x, pts_[i].y - pts_[i - 1].y);
    }
  }

  double length() const { return cum_.back(); }

  Vec2 at(double s) const {
    if (s <= 0.0) return pts_.front();
    if (s >= cum_.back()) return pts_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    const double span = cum_[i] - cum_[i - 1];
    const double f = span > 0.0 ? (s - cum_[i - 1]) / span : 0.0;
    return {pts_[i - 1].x + f * (pts_[i].x - pts_[i - 1].x), pts_[i - 1].y + f * (pts_[i].y - pts_[i - 1].y)};
  }

 private:
  Polyline pts_;
  std::vector<double> cum_;
};

/// Re-spaces a polyline to 1 m along its own length.
Polyline resample(const Polyline& line) {
  const Track track(line);
  const double L = track.length();
  Polyline out;
  for (double s = 0.0; s < L - 1e-9; s += 1.0) out.push_back(track.at(s));
  out.push_back(line.back());
  return out;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + index + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::size_t uniform_count(nn::Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

double signed_curvature(nn::Rng& rng, double r_min, double r_max) {
  const double k = 1.0 / rng.uniform(r_min, r_max);
  return rng.bernoulli(0.5) ? k : -k;
}

/// Per-frame arc lengths from per-step speeds.
std::vector<double> integrate(double s0, const std::vector<double>& speeds, double dt) {
  std::vector<double> s{s0};
  for (const double v : speeds) s.push_back(s.back() + std::max(0.0, v) * dt);
  return s;
}

}  // namespace

scene::SceneRecord generate_scene(const SynthConfig& config, std::size_t index) {
  config.validate();
  if (index >= config.n_scenes) fail(ErrorCode::ContractViolation, "scene index out of range");
  nn::Rng rng(mix(config.seed, index));
  const double dt = 1.0 / config.frame_rate;
  const int T = config.total_frames;
  const int anchor = config.t_obs - 1;
  auto noise = [&] { return config.speed_noise > 0.0 ? rng.normal(0.0, config.speed_noise) : 0.0; };

  // main agent kinematics
  const double v0 = rng.uniform(config.min_speed, config.max_speed);
  const bool has_lead = rng.bernoulli(config.lead_probability);
  const double a0 = has_lead ? 0.0 : rng.uniform(-config.max_accel, config.max_accel);
  const double v_lead = v0 * rng.uniform(0.3, 0.7);
  const double a_brake = rng.uniform(2.0, 4.0);
  std::vector<double> main_speeds;
  for (int t = 0; t + 1 < T; ++t) {
    double v = v0 + a0 * t * dt;
    if (has_lead && t >= anchor) v = std::max(v_lead, v0 - a_brake * (t - anchor + 1) * dt);
    main_speeds.push_back(std::max(0.5, v) + noise());
  }
  const double s_start = 20.0;
  const auto main_s = integrate(s_start, main_speeds, dt);
  const double s_anchor = main_s[static_cast<std::size_t>(anchor)];
  const double length = s_anchor + 90.0;

  // geometry
  const double total_w = config.straight_weight + config.arc_weight + config.fork_weight;
  const double pick = rng.uniform() * total_w;
  const int kind = pick < config.straight_weight ? 0 : pick < config.straight_weight + config.arc_weight ? 1 : 2;
  Route main_route, side_route;
  std::vector<Polyline> polylines;
  const Pose origin{};
  if (kind == 0) {
    main_route = {{length, 0.0}};
  } else if (kind == 1) {
    const double s_curve = s_anchor + rng.uniform(0.0, 15.0);
    const double k = signed_curvature(rng, 20.0, 60.0);
    const double arc = std::min(std::numbers::pi / 2.0 / std::abs(k), length - s_curve);
    main_route = {{s_curve, 0.0}, {arc, k}, {length - s_curve - arc, 0.0}};
  } else {
    const double v_at_fork = main_speeds[static_cast<std::size_t>(anchor) - 1];
    const double s_fork = s_anchor - v_at_fork * rng.uniform(0.5, 1.0);
    const double k_b = signed_curvature(rng, 20.0, 40.0);
    const double k_a = rng.bernoulli(0.5) ? 0.0 : -k_b;
    const double rest = length - s_fork;
    auto branch = [&](double k) {
      const double arc = k == 0.0 ? rest : std::min(std::numbers::pi / 2.0 / std::abs(k), rest);
      return Route{{s_fork, 0.0}, {arc, k}, {rest - arc, 0.0}};
    };
    const Route a = branch(k_a), b = branch(k_b);
    main_route = rng.bernoulli(0.5) ? a : b;
    side_route = a;
    polylines.push_back(sample_route(a, origin, 0.0, s_fork, 0.0));
    polylines.push_back(sample_route(a, origin, s_fork, length, 0.0));
    polylines.push_back(sample_route(b, origin, s_fork, length, 0.0));
  }
  if (side_route.empty()) side_route = main_route;
  if (kind != 2) polylines.push_back(sample_route(main_route, origin, 0.0, length, 0.0));

  const std::size_t n_lanes = uniform_count(rng, config.min_lanes, config.max_lanes);
  const std::size_t main_lane = rng.index(n_lanes);
  std::vector<Polyline> side_lanes;
  for (std::size_t k = 0; k < n_lanes; ++k) {
    if (k == main_lane) continue;
    const double offset = (static_cast<double>(k) - static_cast<double>(main_lane)) * config.lane_spacing;
    side_lanes.push_back(resample(sample_route(side_route, origin, 0.0, route_length(side_route), offset)));
    polylines.push_back(side_lanes.back());
  }

  // agents
  const Track main_track(sample_route(main_route, origin, 0.0, route_length(main_route), 0.0));
  std::vector<scene::AgentTrack> agents;
  auto add_agent = [&](const std::string& id, const Track& track, const std::vector<double>& s, int first_frame,
                       bool is_main) {
    scene::AgentTrack a{id, {}, is_main};
    for (int t = first_frame; t < T; ++t) {
      const Vec2 p = track.at(s[static_cast<std::size_t>(t)]);
      a.positions.push_back({t, p.x, p.y});
    }
    agents.push_back(std::move(a));
  };
  add_agent("main", main_track, main_s, 0, true);

  std::size_t n_agents = uniform_count(rng, config.min_agents, config.max_agents);
  if (has_lead) {
    n_agents = std::max<std::size_t>(n_agents, 2);
    const double gap = 5.0 + (v0 - v_lead) * (v0 - v_lead) / (2.0 * a_brake);
    std::vector<double> speeds;
    for (int t = 0; t + 1 < T; ++t) speeds.push_back(v_lead + noise());
    std::vector<double> lead_s = integrate(0.0, speeds, dt);
    const double shift = s_anchor + gap - lead_s[static_cast<std::size_t>(anchor)];
    for (auto& s : lead_s) s += shift;
    add_agent("lead", main_track, lead_s, 0, false);
  }
  std::vector<Track> side_tracks;
  for (const auto& lane : side_lanes) side_tracks.emplace_back(lane);
  for (std::size_t i = agents.size(); i < n_agents; ++i) {
    const bool behind = side_tracks.empty();
    const Track& track = behind ? main_track : side_tracks[rng.index(side_tracks.size())];
    const double v = rng.uniform(config.min_speed, config.max_speed);
    const double s0 = behind ? rng.uniform(0.0, std::max(0.0, s_start - 10.0)) : rng.uniform(0.0, s_anchor + 40.0);
    std::vector<double> speeds;
    for (int t = 0; t + 1 < T; ++t) speeds.push_back((behind ? std::min(v, v0) : v) + noise());
    const int first = rng.bernoulli(0.3) ? 1 + static_cast<int>(rng.index(15)) : 0;
    add_agent("d" + std::to_string(i), track, integrate(s0, speeds, dt), first, false);
  }

  // place into a random city frame
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto to_city = svg::Affine2::translation({rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)})
                           .compose(svg::Affine2::rotation(theta));
  for (auto& line : polylines) {
    for (auto& p : line) p = to_city.apply(p);
  }
  for (auto& a : agents) {
    for (auto& p : a.positions) {
      const Vec2 q = to_city.apply({p.x, p.y});
      p.x = q.x;
      p.y = q.y;
    }
  }

  char id[64];
  std::snprintf(id, sizeof(id), "synth_%llu_%06zu", static_cast<unsigned long long>(config.seed), index);
  return {id, config.frame_rate, std::move(polylines), std::move(agents)};
}

std::filesystem::path manifest_path_for(const std::filesystem::path& out_path) {
  return out_path.string() + ".manifest.json";
}

void generate_dataset(const SynthConfig& config, const std::filesystem::path& out_path) {
  config.validate();
  std::string text;
  for (std::size_t i = 0; i < config.n_scenes; ++i) text += scene::record_to_json_line(generate_scene(config, i)) + "\n";
  nlohmann::json manifest = nlohmann::json::object();
  manifest["config"] = to_json(config);
  manifest["seed"] = config.seed;
  manifest["n_scenes"] = config.n_scenes;
  const auto [tr0, tr1] = config.train_range();
  const auto [te0, te1] = config.test_range();
  manifest["split_ranges"] = {{"train", {tr0, tr1}}, {"test", {te0, te1}}};
  io::write_file_atomic(out_path, text);
  io::write_file_atomic(manifest_path_for(out_path), manifest.dump(2) + "\n");
}

double distance_to_polylines(Vec2 p, const std::vector<Polyline>& polylines) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : polylines) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const Vec2 a = line[i], b = line[i + 1];
      const double dx = b.x - a.x, dy = b.y - a.y;
      const double len2 = dx * dx + dy * dy;
      double f = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
      f = std::clamp(f, 0.0, 1.0);
      best = std::min(best, std::hypot(p.x - a.x - f * dx, p.y - a.y - f * dy));
    }
    if (line.size() == 1) best = std::min(best, std::hypot(p.x - line[0].x, p.y - line[0].y));
  }
  return best;
}

}  // namespace svgnet::synth
