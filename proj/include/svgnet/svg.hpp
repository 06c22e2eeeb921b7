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

// Supported subset of SVG path objects: command model, path-data grammar,
// document reader, affine transforms, and fixed-length command vectors.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace svgnet::svg {

/// Enum order is the embedding index order.
enum class CommandKind : std::uint8_t { Pad = 0, Eos = 1, MoveTo = 2, LineTo = 3, CubicTo = 4, ClosePath = 5 };

inline constexpr int kNumCommandKinds = 6;
inline constexpr int kNumArgs = 6;
inline constexpr int kNumBins = 256;
inline constexpr int kSentinelBin = -1;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Argument slots are (c1x, c1y, c2x, c2y, x, y). Unused slots are held at 0.
struct SvgCommand {
  CommandKind kind = CommandKind::Pad;
  std::array<double, kNumArgs> args{};

  static SvgCommand pad() { return {CommandKind::Pad, {}}; }
  static SvgCommand eos() { return {CommandKind::Eos, {}}; }
  static SvgCommand close_path() { return {CommandKind::ClosePath, {}}; }
  static SvgCommand move_to(Vec2 p) { return {CommandKind::MoveTo, {0, 0, 0, 0, p.x, p.y}}; }
  static SvgCommand line_to(Vec2 p) { return {CommandKind::LineTo, {0, 0, 0, 0, p.x, p.y}}; }
  static SvgCommand cubic_to(Vec2 c1, Vec2 c2, Vec2 p) {
    return {CommandKind::CubicTo, {c1.x, c1.y, c2.x, c2.y, p.x, p.y}};
  }

  Vec2 end_point() const { return {args[4], args[5]}; }
  bool has_end_point() const {
    return kind == CommandKind::MoveTo || kind == CommandKind::LineTo || kind == CommandKind::CubicTo;
  }

  friend bool operator==(const SvgCommand&, const SvgCommand&) = default;
};

/// Which argument slots a command kind uses.
std::array<bool, kNumArgs> used_slots(CommandKind kind);

enum class SemanticTag : std::uint8_t { Lane, Other };

struct SvgPath {
  std::vector<SvgCommand> commands;
  std::optional<std::string> id;
  SemanticTag semantic_tag = SemanticTag::Other;

  /// Number of drawing segments (LineTo, CubicTo and ClosePath commands).
  std::size_t segment_count() const;
};

struct Viewport {
  Vec2 origin;
  Vec2 extent{1.0, 1.0};

  Viewport() = default;
  /// Throws ContractViolation unless both extents are strictly positive.
  Viewport(Vec2 origin, Vec2 extent);

  bool contains(Vec2 p, double tolerance = 0.0) const;
  Vec2 clamp(Vec2 p) const;
};

struct SvgDocument {
  std::vector<SvgPath> paths;
  Viewport viewport;
  /// Non-path elements skipped while reading.
  std::size_t ignored_elements = 0;
};

/// Row-major 2x3 affine map: (x, y) -> (m[0]x + m[1]y + m[2], m[3]x + m[4]y + m[5]).
struct Affine2 {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};

  static Affine2 identity() { return {}; }
  static Affine2 rotation(double radians);
  static Affine2 translation(Vec2 t);

  Vec2 apply(Vec2 p) const;
  /// this * other: apply `other` first.
  Affine2 compose(const Affine2& other) const;
  Affine2 inverse() const;
};

struct CommandVector {
  int kind_index = 0;
  std::array<int, kNumArgs> arg_bins{kSentinelBin, kSentinelBin, kSentinelBin,
                                     kSentinelBin, kSentinelBin, kSentinelBin};

  static CommandVector pad() { return {}; }
  friend bool operator==(const CommandVector&, const CommandVector&) = default;
};

/// Parses M/m L/l C/c Q/q Z/z path data into absolute coordinates. Quadratic
/// segments are degree-elevated to cubics. Extra coordinate pairs after M are
/// implicit LineTo, as in the SVG grammar.
SvgPath parse_path_data(std::string_view d);

/// Canonical form: absolute uppercase commands separated by single spaces,
/// coordinates in shortest round-trip decimal form.
std::string serialize_path(const SvgPath& path);

/// Reads an XML document with an <svg> root. Every <path> element (at any
/// depth) becomes an SvgPath; other elements are counted in ignored_elements.
SvgDocument parse_document(std::string_view xml);

SvgPath apply_affine(const SvgPath& path, const Affine2& transform);

struct QuantizeOptions {
  bool clamp = true;
};

/// Quantizes used slots to round((coord - origin) / extent * 255) with
/// round-half-up; unused slots get the -1 sentinel.
CommandVector encode_command(const SvgCommand& cmd, const Viewport& viewport,
                             QuantizeOptions options = {});

int quantize_coordinate(double coord, double origin, double extent);
double dequantize_bin(int bin, double origin, double extent);

/// Splits into chunks of at most max_commands commands. Continuation chunks
/// start with a MoveTo at the previous chunk's endpoint.
std::vector<SvgPath> split_path(const SvgPath& path, std::size_t max_commands);

}  // namespace svgnet::svg
