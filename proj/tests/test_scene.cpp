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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "svgnet/io.hpp"
#include "svgnet/scene.hpp"
#include "test_support.hpp"

using namespace svgnet;
using namespace svgnet::scene;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("svgnet_scene_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

AgentTrack straight_track(const std::string& id, bool main, Vec2 start, Vec2 step, int first, int last) {
  AgentTrack a{id, {}, main};
  for (int f = first; f <= last; ++f) a.positions.push_back({f, start.x + f * step.x, start.y + f * step.y});
  return a;
}

SceneRecord simple_record() {
  SceneRecord r;
  r.scene_id = "s0";
  r.map_polylines = {{{100, 205}, {110, 205}, {120, 205}}, {{100, 195}, {130, 195}}};
  r.agents = {straight_track("m", true, {100, 200}, {1, 0}, 0, 49),
              straight_track("o", false, {90, 203}, {0.5, 0}, 8, 49)};
  return r;
}

}  // namespace

TEST_CASE("records round trip through JSONL") {
  const auto r = simple_record();
  const auto line = record_to_json_line(r);
  CHECK(parse_record_line(line, 1) == r);
  CHECK(record_to_json_line(parse_record_line(line, 1)) == line);
}

TEST_CASE("schema errors carry line and field") {
  try {
    parse_record_line(R"({"scene_id":"x","frame_rate":10,"map_polylines":[]})", 7);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line_no() == 7);
    CHECK(e.field() == "agents");
  }
  // two main agents
  auto r = simple_record();
  r.agents[1].is_main = true;
  CHECK_THROWS_AS(parse_record_line(record_to_json_line(r), 1), SchemaError);
  // non-increasing frames
  r = simple_record();
  r.agents[0].positions[3].frame = 1;
  CHECK_THROWS_AS(parse_record_line(record_to_json_line(r), 1), SchemaError);
}

TEST_CASE("load_dataset keeps good lines around bad ones") {
  const auto good = record_to_json_line(simple_record());
  const auto path = scratch("three.jsonl");
  io::write_file_atomic(path, good + "\n" + good + "\n" + good + "\n");
  CHECK(load_dataset(path).records.size() == 3);

  io::write_file_atomic(path, good + "\n" + R"({"scene_id":"x","frame_rate":10,"map_polylines":[]})" + "\n" + good + "\n");
  const auto mixed = load_dataset(path);
  CHECK(mixed.records.size() == 2);
  REQUIRE(mixed.errors.size() == 1);
  CHECK(mixed.errors[0].line_no() == 2);
  CHECK(mixed.errors[0].field() == "agents");
  CHECK_THROWS_AS(load_dataset_strict(path), SchemaError);

  io::write_file_atomic(path, "");
  CHECK(load_dataset(path).records.empty());

  try {
    load_dataset(scratch("missing.jsonl"));
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("polylines_to_svg") {
  const svg::Viewport vp({-50, -50}, {100, 100});
  const auto conv = polylines_to_svg({{{0, 0}, {1, 0}, {2, 0}}}, vp);
  REQUIRE(conv.document.paths.size() == 1);
  const auto& cmds = conv.document.paths[0].commands;
  REQUIRE(cmds.size() == 3);
  CHECK(cmds[0] == svg::SvgCommand::move_to({0, 0}));
  CHECK(cmds[1] == svg::SvgCommand::line_to({1, 0}));
  CHECK(cmds[2] == svg::SvgCommand::line_to({2, 0}));

  CHECK(polylines_to_svg({}, vp).document.paths.empty());
  CHECK(polylines_to_svg({{{1, 1}}}, vp).degenerate_skipped == 1);
  CHECK(polylines_to_svg({{{100, 100}, {120, 100}}}, vp).document.paths.empty());

  nn::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.index(6), m = 2 + rng.index(29);
    std::vector<Polyline> lines(k);
    for (auto& l : lines) {
      for (std::size_t i = 0; i < m; ++i) l.push_back({rng.uniform(-40, 40), rng.uniform(-40, 40)});
    }
    const auto doc = polylines_to_svg(lines, vp).document;
    REQUIRE(doc.paths.size() == k);
    for (const auto& p : doc.paths) {
      CHECK(p.commands.size() == m);
      for (const auto& c : p.commands) {
        CHECK((c.kind == svg::CommandKind::MoveTo || c.kind == svg::CommandKind::LineTo));
      }
    }
  }
}

TEST_CASE("clipping keeps points inside the viewport") {
  const svg::Viewport vp({-10, -10}, {20, 20});
  const auto pieces = clip_polyline({{-20, 0}, {20, 0}}, vp);
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].front().x == doctest::Approx(-10));
  CHECK(pieces[0].back().x == doctest::Approx(10));
  CHECK(clip_polyline({{-20, 20}, {20, 20}}, vp).empty());
  CHECK(clip_polyline({{-5, 0}, {-5, 20}, {5, 20}, {5, 0}}, vp).size() == 2);
}

TEST_CASE("normalization of an eastbound agent") {
  SceneRecord r;
  r.scene_id = "east";
  r.agents = {straight_track("m", true, {10, 20}, {1, 0}, 0, 49)};
  const auto s = normalize_sample(r);
  REQUIRE(s.main_history.size() == 20);
  CHECK(s.main_history.back() == Vec2{0, 0});
  for (int t = 0; t < 20; ++t) {
    CHECK(std::abs(s.main_history[t].x) < 1e-9);
    CHECK(s.main_history[t].y == doctest::Approx(t - 19.0));
  }
  REQUIRE(s.target);
  CHECK(s.target->back().y == doctest::Approx(30.0));
  CHECK_FALSE(s.heading_fallback);
}

TEST_CASE("stationary agent keeps the identity rotation") {
  SceneRecord r;
  r.agents = {straight_track("m", true, {3, 4}, {0.001, 0}, 0, 49)};
  const auto s = normalize_sample(r);
  CHECK(s.heading_fallback);
  CHECK(s.heading_rotation == 0.0);
}

TEST_CASE("insufficient history") {
  SceneRecord r;
  r.agents = {straight_track("m", true, {0, 0}, {1, 0}, 0, 10)};
  try {
    normalize_sample(r);
    FAIL("expected InsufficientHistory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientHistory);
  }
  // prediction record: history only
  r.agents = {straight_track("m", true, {0, 0}, {1, 0}, 0, 19)};
  CHECK_FALSE(normalize_sample(r).target.has_value());
}

TEST_CASE("normalization is rigid and invertible") {
  const auto c = testing::small_synth(30);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto rec = synth::generate_scene(c, i);
    const auto s = normalize_sample(rec);
    const auto& main = rec.main_agent();
    const auto anchor = *main.at_frame(19);
    const auto back = s.frame_to_city.apply({0, 0});
    CHECK(std::hypot(back.x - anchor.x, back.y - anchor.y) < 1e-6);
    for (int t = 0; t < 30; ++t) {
      const auto gt = *main.at_frame(20 + t);
      const auto p = s.frame_to_city.apply((*s.target)[t]);
      CHECK(std::hypot(p.x - gt.x, p.y - gt.y) < 1e-6);
    }
    // terminal heading on +y
    const auto d = s.main_history[19];
    const auto e = s.main_history[14];
    if (!s.heading_fallback) CHECK(std::abs(std::atan2(d.x - e.x, d.y - e.y)) < 1e-6);
    // pairwise distances among history points are preserved
    for (int a = 0; a < 20; a += 7) {
      for (int b = a + 1; b < 20; b += 5) {
        const auto pa = *main.at_frame(a), pb = *main.at_frame(b);
        const double city = std::hypot(pa.x - pb.x, pa.y - pb.y);
        const double frame = std::hypot(s.main_history[a].x - s.main_history[b].x,
                                        s.main_history[a].y - s.main_history[b].y);
        CHECK(std::abs(city - frame) < 1e-6);
      }
    }
  }
}

TEST_CASE("make_batch masks and caps") {
  auto s = normalize_sample(simple_record());
  const auto b = make_batch({s}, BatchCaps{});
  std::size_t live = 0;
  for (auto m : b.path_mask) live += m;
  CHECK(live == 2);
  CHECK(b.main_history.size() == 40);
  REQUIRE(b.targets);
  CHECK(b.targets->size() == 60);
  CHECK(b.output_dim() == 60);
  // masked cells hold Pad
  for (std::size_t i = 0; i < b.command_grid.size(); ++i) {
    if (!b.command_mask[i]) CHECK(b.command_grid[i] == svg::CommandVector::pad());
  }

  // other agent observed from frame 8 only: 12 of 20 frames valid
  REQUIRE(b.agent_mask[0] == 1);
  std::size_t valid = 0;
  for (int t = 0; t < 20; ++t) {
    const bool v = b.agent_frame_mask[t];
    valid += v;
    if (!v) {
      CHECK(b.agent_histories[2 * t] == 0.0);
      CHECK(b.agent_histories[2 * t + 1] == 0.0);
    }
  }
  CHECK(valid == 12);

  CHECK_THROWS_AS(make_batch({}, BatchCaps{}), Error);
}

TEST_CASE("farthest paths and agents are dropped first") {
  NormalizedSample s = normalize_sample(simple_record());
  s.scene_svg.paths.clear();
  for (int i = 0; i < 130; ++i) {
    svg::SvgPath p;
    p.id = "p" + std::to_string(i);
    const double y = i * 0.3;
    p.commands = {svg::SvgCommand::move_to({-1, y}), svg::SvgCommand::line_to({1, y})};
    s.scene_svg.paths.push_back(p);
  }
  const auto b = make_batch({s}, BatchCaps{});
  std::set<std::string> ids(b.path_ids.begin(), b.path_ids.end());
  CHECK(ids.size() == 128);
  CHECK_FALSE(ids.count("p128"));
  CHECK_FALSE(ids.count("p129"));
  CHECK(ids.count("p0"));

  s.other_histories.clear();
  for (int i = 0; i < 3; ++i) {
    OtherAgentHistory h{"a" + std::to_string(i), std::vector<Vec2>(20, Vec2{0, 10.0 * (3 - i)}),
                        std::vector<bool>(20, true)};
    s.other_histories.push_back(h);
  }
  const auto small = make_batch({s}, BatchCaps{128, 30, 2});
  CHECK(small.agent_ids[0] == "a1");
  CHECK(small.agent_ids[1] == "a2");
}

TEST_CASE("batch_paths splits long paths with unique ids") {
  NormalizedSample s = normalize_sample(simple_record());
  svg::SvgPath p;
  p.id = "long";
  p.commands = {svg::SvgCommand::move_to({0, 0})};
  for (int i = 1; i < 12; ++i) p.commands.push_back(svg::SvgCommand::line_to({double(i), 0}));
  s.scene_svg.paths = {p};
  const auto paths = batch_paths(s, BatchCaps{4, 6, 2});
  REQUIRE(paths.size() == 3);
  CHECK(*paths[0].id == "long.0");
  CHECK(*paths[2].id == "long.2");
}

TEST_CASE("argoverse import") {
  const auto map = scratch("map.json");
  io::write_file_atomic(map, R"({"PIT": [[[0, 0], [10, 0]], [[5000, 5000], [5010, 5000]]], "MIA": []})");
  auto csv = [&](const std::string& name, bool with_agent, double jitter_at_10) {
    std::string text = "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y,CITY_NAME\n";
    for (int f = 0; f < 50; ++f) {
      const double t = 315970000.0 + 0.1 * f + (f >= 10 ? jitter_at_10 : 0.0);
      char row[256];
      std::snprintf(row, sizeof(row), "%.3f,main-id,%s,%d,0,PIT\n%.3f,car-1,OTHERS,%d,3.5,PIT\n", t,
                    with_agent ? "AGENT" : "OTHERS", f, t, f);
      text += row;
      if (f >= 30) {
        std::snprintf(row, sizeof(row), "%.3f,car-2,AV,%d,-3.5,PIT\n", t, f);
        text += row;
      }
    }
    const auto p = scratch(name);
    io::write_file_atomic(p, text);
    return p;
  };

  const auto rec = import_argoverse_sequence(csv("seq1.csv", true, 0.0), map);
  CHECK(rec.scene_id == "seq1");
  REQUIRE(rec.agents.size() == 3);
  CHECK(rec.agents[0].is_main);
  CHECK(rec.agents[0].positions.size() == 50);
  CHECK(rec.agents[0].positions.back().frame == 49);
  CHECK(rec.agents[2].positions.front().frame == 30);
  CHECK(rec.map_polylines.size() == 1);

  try {
    import_argoverse_sequence(csv("seq2.csv", false, 0.0), map);
    FAIL("expected MissingMainAgent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingMainAgent);
  }
  try {
    import_argoverse_sequence(csv("seq3.csv", true, 0.05), map);
    FAIL("expected BadTimestampGrid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadTimestampGrid);
  }

  const auto out = scratch("imported.jsonl");
  import_argoverse_csv({csv("seq4.csv", true, 0.0)}, map, out);
  CHECK(load_dataset_strict(out).size() == 1);
}
