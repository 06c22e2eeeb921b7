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

#include "svgnet/error.hpp"
#include "svgnet/svg.hpp"
#include "test_support.hpp"

using namespace svgnet;
using namespace svgnet::svg;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ContractViolation;
}

Vec2 cubic_at(Vec2 p0, Vec2 c1, Vec2 c2, Vec2 p3, double t) {
  const double u = 1 - t;
  return {u * u * u * p0.x + 3 * u * u * t * c1.x + 3 * u * t * t * c2.x + t * t * t * p3.x,
          u * u * u * p0.y + 3 * u * u * t * c1.y + 3 * u * t * t * c2.y + t * t * t * p3.y};
}

Vec2 quad_at(Vec2 p0, Vec2 q, Vec2 p2, double t) {
  const double u = 1 - t;
  return {u * u * p0.x + 2 * u * t * q.x + t * t * p2.x, u * u * p0.y + 2 * u * t * q.y + t * t * p2.y};
}

}  // namespace

TEST_CASE("parse absolute polyline") {
  const auto p = parse_path_data("M 0 0 L 10 0 L 10 10");
  REQUIRE(p.commands.size() == 3);
  CHECK(p.commands[0] == SvgCommand::move_to({0, 0}));
  CHECK(p.commands[1] == SvgCommand::line_to({10, 0}));
  CHECK(p.commands[2] == SvgCommand::line_to({10, 10}));
}

TEST_CASE("quadratic is degree-elevated") {
  const auto p = parse_path_data("M 0 0 Q 1 1 2 0");
  REQUIRE(p.commands.size() == 2);
  const auto& c = p.commands[1];
  CHECK(c.kind == CommandKind::CubicTo);
  CHECK(c.args[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(c.args[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(c.args[2] == doctest::Approx(4.0 / 3).epsilon(1e-15));
  CHECK(c.args[3] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(c.args[4] == 2.0);
  CHECK(c.args[5] == 0.0);
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    const Vec2 a = cubic_at({0, 0}, {c.args[0], c.args[1]}, {c.args[2], c.args[3]}, {2, 0}, t);
    const Vec2 b = quad_at({0, 0}, {1, 1}, {2, 0}, t);
    CHECK(std::abs(a.x - b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
  }
}

TEST_CASE("random quadratics match their elevation at 11 parameters") {
  nn::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 p0{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Vec2 q{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Vec2 p2{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    SvgPath p;
    p.commands = {SvgCommand::move_to(p0)};
    char d[256];
    std::snprintf(d, sizeof(d), "M %.17g %.17g Q %.17g %.17g %.17g %.17g", p0.x, p0.y, q.x, q.y, p2.x, p2.y);
    const auto c = parse_path_data(d).commands.at(1);
    for (int i = 0; i <= 10; ++i) {
      const Vec2 a = cubic_at(p0, {c.args[0], c.args[1]}, {c.args[2], c.args[3]}, {c.args[4], c.args[5]}, i / 10.0);
      const Vec2 b = quad_at(p0, q, p2, i / 10.0);
      CHECK(std::hypot(a.x - b.x, a.y - b.y) < 1e-9);
    }
  }
}

TEST_CASE("relative commands become absolute") {
  const auto p = parse_path_data("m 1 1 l 2 0 c 1 0 1 1 1 1 z l 1 1");
  REQUIRE(p.commands.size() == 5);
  CHECK(p.commands[1] == SvgCommand::line_to({3, 1}));
  CHECK(p.commands[2] == SvgCommand::cubic_to({4, 1}, {4, 2}, {4, 2}));
  CHECK(p.commands[3].kind == CommandKind::ClosePath);
  // after Z the current point returns to the subpath start
  CHECK(p.commands[4] == SvgCommand::line_to({2, 2}));
}

TEST_CASE("implicit lineto after moveto and compact numbers") {
  const auto p = parse_path_data("M0,0 10,0-5.5.5e1");
  REQUIRE(p.commands.size() == 3);
  CHECK(p.commands[1] == SvgCommand::line_to({10, 0}));
  CHECK(p.commands[2] == SvgCommand::line_to({-5.5, 5}));
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { parse_path_data("L 5"); }) == ErrorCode::ArityError);
  CHECK(code_of([] { parse_path_data("M 0 0 A 1 1 0 0 1 2 2"); }) == ErrorCode::UnsupportedCommand);
  CHECK(code_of([] { parse_path_data("M 0 0 H 4"); }) == ErrorCode::UnsupportedCommand);
  CHECK(code_of([] { parse_path_data("M 0 0 S 1 1 2 2"); }) == ErrorCode::UnsupportedCommand);
  CHECK(code_of([] { parse_path_data("M 0 0 L 1 1e"); }) == ErrorCode::MalformedNumber);
  CHECK(code_of([] { parse_path_data("M 0 0 L - 1"); }) == ErrorCode::MalformedNumber);
  CHECK(code_of([] { parse_path_data("M 0 0 C 1 1 2 2"); }) == ErrorCode::ArityError);
  CHECK(code_of([] { parse_path_data("M 0 0 L 1 x"); }) == ErrorCode::ArityError);
}

TEST_CASE("serialize canonical form") {
  SvgPath p;
  p.commands = {SvgCommand::move_to({0, 0}), SvgCommand::line_to({1, 2})};
  CHECK(serialize_path(p) == "M 0 0 L 1 2");
  p.commands.push_back(SvgCommand::close_path());
  CHECK(serialize_path(p) == "M 0 0 L 1 2 Z");
  p.commands.push_back(SvgCommand::pad());
  CHECK(code_of([&] { serialize_path(p); }) == ErrorCode::ContractViolation);
}

TEST_CASE("round trip on random paths") {
  nn::Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto p = testing::random_path(rng);
    CHECK(parse_path_data(serialize_path(p)).commands == p.commands);
    const auto q = parse_path_data(testing::random_path_data(rng));
    CHECK(parse_path_data(serialize_path(q)).commands == q.commands);
  }
}

TEST_CASE("parse documents") {
  const auto doc = parse_document(
      R"(<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 50"><path d="M 0 0 L 1 1"/>)"
      R"(<g><path class="lane" id="a" d="M 1 1 L 2 2"/></g></svg>)");
  REQUIRE(doc.paths.size() == 2);
  CHECK(doc.viewport.extent == Vec2{100, 50});
  CHECK(doc.paths[1].semantic_tag == SemanticTag::Lane);
  CHECK(doc.paths[1].id == std::optional<std::string>("a"));

  const auto circle = parse_document(R"(<svg width="10" height="10"><circle r="1"/></svg>)");
  CHECK(circle.paths.empty());
  CHECK(circle.ignored_elements == 1);

  CHECK(code_of([] { parse_document(R"(<svg viewBox="0 0 1 1"><path d="M 0 0)"); }) == ErrorCode::XmlParseError);
  CHECK(code_of([] { parse_document(R"(<svg><path d="M 0 0"/></svg>)"); }) == ErrorCode::MissingViewport);
  CHECK(code_of([] { parse_document(R"(<html width="1" height="1"/>)"); }) == ErrorCode::XmlParseError);
}

TEST_CASE("affine transforms") {
  const auto p = parse_path_data("M 1 2 L 3 4 C 1 1 2 2 3 3 Z");
  CHECK(apply_affine(p, Affine2::identity()).commands == p.commands);

  SvgPath unit;
  unit.commands = {SvgCommand::line_to({1, 0})};
  const auto r = apply_affine(unit, Affine2::rotation(std::acos(-1.0) / 2)).commands[0];
  CHECK(r.kind == CommandKind::LineTo);
  CHECK(std::abs(r.args[4]) < 1e-12);
  CHECK(std::abs(r.args[5] - 1.0) < 1e-12);

  nn::Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    Affine2 a, b;
    for (auto& v : a.m) v = rng.uniform(-2, 2);
    for (auto& v : b.m) v = rng.uniform(-2, 2);
    const auto path = testing::random_path(rng);
    const auto lhs = apply_affine(apply_affine(path, b), a);
    const auto rhs = apply_affine(path, a.compose(b));
    for (std::size_t k = 0; k < path.commands.size(); ++k) {
      CHECK(lhs.commands[k].kind == path.commands[k].kind);
      for (int s = 0; s < kNumArgs; ++s) CHECK(std::abs(lhs.commands[k].args[s] - rhs.commands[k].args[s]) < 1e-9);
    }
  }
}

TEST_CASE("encode_command quantization") {
  const Viewport vp({0, 0}, {100, 100});
  const auto a = encode_command(SvgCommand::line_to({0, 0}), vp);
  CHECK(a.kind_index == static_cast<int>(CommandKind::LineTo));
  CHECK(a.arg_bins == std::array<int, 6>{-1, -1, -1, -1, 0, 0});
  const auto b = encode_command(SvgCommand::line_to({50, 100}), vp);
  CHECK(b.arg_bins[4] == 128);
  CHECK(b.arg_bins[5] == 255);
  const auto z = encode_command(SvgCommand::close_path(), vp);
  CHECK(z.kind_index == static_cast<int>(CommandKind::ClosePath));
  CHECK(z.arg_bins == std::array<int, 6>{-1, -1, -1, -1, -1, -1});
  const auto c = encode_command(SvgCommand::cubic_to({10, 20}, {30, 40}, {50, 60}), vp);
  for (int s = 0; s < 6; ++s) CHECK(c.arg_bins[s] >= 0);

  // outside the viewport: clamped by default, rejected without clamping
  CHECK(encode_command(SvgCommand::line_to({150, -3}), vp).arg_bins[4] == 255);
  CHECK(code_of([&] { encode_command(SvgCommand::line_to({150, 0}), vp, {.clamp = false}); }) ==
        ErrorCode::OutOfViewport);
  CHECK_NOTHROW(encode_command(SvgCommand::line_to({100 + 1e-5, 0}), vp, {.clamp = false}));
  CHECK(code_of([] { Viewport({0, 0}, {0, 1}); }) == ErrorCode::ContractViolation);
}

TEST_CASE("quantization is monotone with bounded error") {
  nn::Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double origin = rng.uniform(-100, 100), extent = rng.uniform(0.5, 300);
    const double a = origin + rng.uniform() * extent, b = origin + rng.uniform() * extent;
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(quantize_coordinate(lo, origin, extent) <= quantize_coordinate(hi, origin, extent));
    const double back = dequantize_bin(quantize_coordinate(a, origin, extent), origin, extent);
    CHECK(std::abs(back - a) <= extent / 255.0 / 2.0 + 1e-9);
  }
}

TEST_CASE("split_path") {
  SvgPath small;
  small.commands = {SvgCommand::move_to({0, 0})};
  for (int i = 1; i < 5; ++i) small.commands.push_back(SvgCommand::line_to({double(i), 0}));
  const auto one = split_path(small, 10);
  REQUIRE(one.size() == 1);
  CHECK(one[0].commands == small.commands);

  SvgPath big;
  big.commands = {SvgCommand::move_to({0, 0})};
  for (int i = 1; i < 35; ++i) big.commands.push_back(SvgCommand::line_to({double(i), double(i % 3)}));
  const auto two = split_path(big, 30);
  REQUIRE(two.size() == 2);
  CHECK(two[0].commands.size() == 30);
  CHECK(two[1].commands.front() == SvgCommand::move_to(big.commands[29].end_point()));
  CHECK(two[0].segment_count() + two[1].segment_count() == big.segment_count());

  CHECK(code_of([&] { split_path(big, 1); }) == ErrorCode::ContractViolation);

  nn::Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto p = testing::random_path(rng, 40);
    const std::size_t max = 2 + rng.index(10);
    std::size_t segments = 0;
    for (const auto& chunk : split_path(p, max)) {
      CHECK(chunk.commands.size() <= max);
      CHECK(chunk.commands.front().kind == CommandKind::MoveTo);
      segments += chunk.segment_count();
    }
    CHECK(segments == p.segment_count());
  }
}
