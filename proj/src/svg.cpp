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

#include "svgnet/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "svgnet/error.hpp"

namespace svgnet::svg {

std::array<bool, kNumArgs> used_slots(CommandKind kind) {
  switch (kind) {
    case CommandKind::MoveTo:
    case CommandKind::LineTo:
      return {false, false, false, false, true, true};
    case CommandKind::CubicTo:
      return {true, true, true, true, true, true};
    default:
      return {false, false, false, false, false, false};
  }
}

std::size_t SvgPath::segment_count() const {
  return static_cast<std::size_t>(std::count_if(commands.begin(), commands.end(), [](const SvgCommand& c) {
    return c.kind == CommandKind::LineTo || c.kind == CommandKind::CubicTo ||
           c.kind == CommandKind::ClosePath;
  }));
}

Viewport::Viewport(Vec2 origin_, Vec2 extent_) : origin(origin_), extent(extent_) {
  if (!(extent.x > 0.0) || !(extent.y > 0.0) || !std::isfinite(extent.x) || !std::isfinite(extent.y)) {
    fail(ErrorCode::ContractViolation, "viewport extent must be strictly positive");
  }
}

bool Viewport::contains(Vec2 p, double tolerance) const {
  return p.x >= origin.x - tolerance && p.x <= origin.x + extent.x + tolerance &&
         p.y >= origin.y - tolerance && p.y <= origin.y + extent.y + tolerance;
}

Vec2 Viewport::clamp(Vec2 p) const {
  return {std::clamp(p.x, origin.x, origin.x + extent.x), std::clamp(p.y, origin.y, origin.y + extent.y)};
}

// ---------------------------------------------------------------------------
// Affine maps

Affine2 Affine2::rotation(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {{c, -s, 0.0, s, c, 0.0}};
}

Affine2 Affine2::translation(Vec2 t) { return {{1.0, 0.0, t.x, 0.0, 1.0, t.y}}; }

Vec2 Affine2::apply(Vec2 p) const {
  return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
}

Affine2 Affine2::compose(const Affine2& o) const {
  return {{m[0] * o.m[0] + m[1] * o.m[3], m[0] * o.m[1] + m[1] * o.m[4], m[0] * o.m[2] + m[1] * o.m[5] + m[2],
           m[3] * o.m[0] + m[4] * o.m[3], m[3] * o.m[1] + m[4] * o.m[4], m[3] * o.m[2] + m[4] * o.m[5] + m[5]}};
}

Affine2 Affine2::inverse() const {
  const double det = m[0] * m[4] - m[1] * m[3];
  if (det == 0.0 || !std::isfinite(det)) fail(ErrorCode::ContractViolation, "affine map is singular");
  const double a = m[4] / det, b = -m[1] / det, d = -m[3] / det, e = m[0] / det;
  return {{a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])}};
}

SvgPath apply_affine(const SvgPath& path, const Affine2& transform) {
  SvgPath out = path;
  for (auto& cmd : out.commands) {
    const auto used = used_slots(cmd.kind);
    for (int slot = 0; slot < kNumArgs; slot += 2) {
      if (!used[slot]) continue;
      const Vec2 p = transform.apply({cmd.args[slot], cmd.args[slot + 1]});
      cmd.args[slot] = p.x;
      cmd.args[slot + 1] = p.y;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path-data grammar

namespace {

class PathLexer {
 public:
  explicit PathLexer(std::string_view text) : text_(text) {}

  void skip_separators() {
    while (pos_ < text_.size() && (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == ',')) {
      ++pos_;
    }
  }

  bool at_end() {
    skip_separators();
    return pos_ >= text_.size();
  }

  bool at_number() {
    skip_separators();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
  }

  char take_command() {
    skip_separators();
    return text_[pos_++];
  }

  // SVG number: sign? (digits ('.' digits?)? | '.' digits) (('e'|'E') sign? digits)?
  double take_number() {
    skip_separators();
    const std::size_t start = pos_;
    std::size_t i = pos_;
    if (i < text_.size() && (text_[i] == '+' || text_[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i, ++digits;
    if (i < text_.size() && text_[i] == '.') {
      ++i;
      while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i, ++digits;
    }
    if (digits == 0) malformed(start);
    if (i < text_.size() && (text_[i] == 'e' || text_[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < text_.size() && (text_[j] == '+' || text_[j] == '-')) ++j;
      std::size_t exp_digits = 0;
      while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j, ++exp_digits;
      if (exp_digits == 0) malformed(start);
      i = j;
    }
    std::size_t first = start;
    if (text_[first] == '+') ++first;  // from_chars rejects a leading '+'
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + first, text_.data() + i, value);
    if (ec != std::errc() || ptr != text_.data() + i || !std::isfinite(value)) malformed(start);
    pos_ = i;
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  [[noreturn]] void malformed(std::size_t start) const {
    std::size_t end = start;
    while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) && text_[end] != ',') ++end;
    fail(ErrorCode::MalformedNumber,
         "bad number '" + std::string(text_.substr(start, end - start)) + "' at offset " + std::to_string(start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int arity_of(char upper) {
  switch (upper) {
    case 'M':
    case 'L':
      return 2;
    case 'Q':
      return 4;
    case 'C':
      return 6;
    case 'Z':
      return 0;
    default:
      return -1;
  }
}

}  // namespace

SvgPath parse_path_data(std::string_view d) {
  PathLexer lex(d);
  SvgPath path;
  Vec2 current{};
  Vec2 subpath_start{};
  bool have_current = false;

  while (!lex.at_end()) {
    if (lex.at_number()) {
      fail(ErrorCode::ArityError, "unexpected number at offset " + std::to_string(lex.position()) +
                                      " (no command or too many arguments)");
    }
    const std::size_t cmd_pos = lex.position();
    const char letter = lex.take_command();
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
    const bool relative = letter != upper;
    const int arity = arity_of(upper);
    if (arity < 0 || !std::isalpha(static_cast<unsigned char>(letter))) {
      fail(ErrorCode::UnsupportedCommand,
           std::string("command '") + letter + "' at offset " + std::to_string(cmd_pos) + " is not supported");
    }
    if (upper != 'M' && !have_current) {
      fail(ErrorCode::ArityError, "path data must start with a MoveTo");
    }

    if (upper == 'Z') {
      path.commands.push_back(SvgCommand::close_path());
      current = subpath_start;
      continue;
    }

    bool first_group = true;
    do {
      std::array<double, 6> v{};
      for (int k = 0; k < arity; ++k) {
        if (!lex.at_number()) {
          fail(ErrorCode::ArityError, std::string("command '") + letter + "' at offset " + std::to_string(cmd_pos) +
                                          " expects " + std::to_string(arity) + " arguments per group");
        }
        v[k] = lex.take_number();
      }
      const Vec2 base = relative ? current : Vec2{};
      auto point = [&](int k) { return Vec2{base.x + v[k], base.y + v[k + 1]}; };

      if (upper == 'M') {
        const Vec2 p = point(0);
        if (first_group) {
          path.commands.push_back(SvgCommand::move_to(p));
          subpath_start = p;
        } else {
          path.commands.push_back(SvgCommand::line_to(p));
        }
        current = p;
        have_current = true;
      } else if (upper == 'L') {
        current = point(0);
        path.commands.push_back(SvgCommand::line_to(current));
      } else if (upper == 'C') {
        const Vec2 end = point(4);
        path.commands.push_back(SvgCommand::cubic_to(point(0), point(2), end));
        current = end;
      } else {  // 'Q': exact degree elevation to a cubic
        const Vec2 p0 = current;
        const Vec2 q = point(0);
        const Vec2 p2 = point(2);
        const Vec2 c1{p0.x + 2.0 / 3.0 * (q.x - p0.x), p0.y + 2.0 / 3.0 * (q.y - p0.y)};
        const Vec2 c2{p2.x + 2.0 / 3.0 * (q.x - p2.x), p2.y + 2.0 / 3.0 * (q.y - p2.y)};
        path.commands.push_back(SvgCommand::cubic_to(c1, c2, p2));
        current = p2;
      }
      first_group = false;
    } while (lex.at_number());
  }
  return path;
}

namespace {

void append_number(std::string& out, double value) {
  if (value == 0.0) value = 0.0;  // normalizes -0
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

std::string serialize_path(const SvgPath& path) {
  std::string out;
  for (const auto& cmd : path.commands) {
    char letter = 0;
    switch (cmd.kind) {
      case CommandKind::MoveTo: letter = 'M'; break;
      case CommandKind::LineTo: letter = 'L'; break;
      case CommandKind::CubicTo: letter = 'C'; break;
      case CommandKind::ClosePath: letter = 'Z'; break;
      case CommandKind::Pad:
      case CommandKind::Eos:
        fail(ErrorCode::ContractViolation, "Pad/Eos commands cannot be serialized");
    }
    if (!out.empty()) out.push_back(' ');
    out.push_back(letter);
    const auto used = used_slots(cmd.kind);
    for (int slot = 0; slot < kNumArgs; ++slot) {
      if (!used[slot]) continue;
      out.push_back(' ');
      append_number(out, cmd.args[slot]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Documents

namespace {

namespace pt = boost::property_tree;

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  PathLexer lex(text);
  while (!lex.at_end()) {
    if (!lex.at_number()) fail(ErrorCode::MalformedNumber, "bad number list '" + text + "'");
    values.push_back(lex.take_number());
  }
  return values;
}

double parse_length(const std::string& raw) {
  std::string text = raw;
  for (const char* unit : {"px", "pt", "mm", "cm", "in", "m"}) {
    const std::string u(unit);
    if (text.size() > u.size() && text.compare(text.size() - u.size(), u.size(), u) == 0) {
      text.resize(text.size() - u.size());
      break;
    }
  }
  const auto values = parse_number_list(text);
  if (values.size() != 1) fail(ErrorCode::MissingViewport, "bad length '" + raw + "'");
  return values[0];
}

void collect_paths(const pt::ptree& node, SvgDocument& doc) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>" || name == "<xmltext>") continue;
    if (name == "path") {
      const auto d = child.get_optional<std::string>("<xmlattr>.d");
      SvgPath path = d ? parse_path_data(*d) : SvgPath{};
      if (auto id = child.get_optional<std::string>("<xmlattr>.id")) path.id = *id;
      const auto cls = child.get<std::string>("<xmlattr>.class", "");
      const auto tag = child.get<std::string>("<xmlattr>.data-tag", "");
      if (tag == "lane" || cls.find("lane") != std::string::npos) path.semantic_tag = SemanticTag::Lane;
      doc.paths.push_back(std::move(path));
    } else if (name == "g") {
      collect_paths(child, doc);
    } else {
      ++doc.ignored_elements;
    }
  }
}

}  // namespace

SvgDocument parse_document(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    fail(ErrorCode::XmlParseError, e.what());
  }
  const auto root = tree.get_child_optional("svg");
  if (!root) fail(ErrorCode::XmlParseError, "root element is not <svg>");

  SvgDocument doc;
  if (auto view_box = root->get_optional<std::string>("<xmlattr>.viewBox")) {
    const auto v = parse_number_list(*view_box);
    if (v.size() != 4 || !(v[2] > 0) || !(v[3] > 0)) fail(ErrorCode::MissingViewport, "bad viewBox '" + *view_box + "'");
    doc.viewport = Viewport({v[0], v[1]}, {v[2], v[3]});
  } else {
    const auto width = root->get_optional<std::string>("<xmlattr>.width");
    const auto height = root->get_optional<std::string>("<xmlattr>.height");
    if (!width || !height) fail(ErrorCode::MissingViewport, "svg root needs viewBox or width/height");
    const double w = parse_length(*width);
    const double h = parse_length(*height);
    if (!(w > 0) || !(h > 0)) fail(ErrorCode::MissingViewport, "width/height must be positive");
    doc.viewport = Viewport({0.0, 0.0}, {w, h});
  }
  collect_paths(*root, doc);
  return doc;
}

// ---------------------------------------------------------------------------
// Quantization

int quantize_coordinate(double coord, double origin, double extent) {
  return static_cast<int>(std::floor((coord - origin) / extent * (kNumBins - 1) + 0.5));
}

double dequantize_bin(int bin, double origin, double extent) {
  return origin + static_cast<double>(bin) / (kNumBins - 1) * extent;
}

CommandVector encode_command(const SvgCommand& cmd, const Viewport& viewport, QuantizeOptions options) {
  CommandVector out;
  out.kind_index = static_cast<int>(cmd.kind);
  const auto used = used_slots(cmd.kind);
  for (int slot = 0; slot < kNumArgs; ++slot) {
    if (!used[slot]) continue;
    const bool is_x = slot % 2 == 0;
    const double origin = is_x ? viewport.origin.x : viewport.origin.y;
    const double extent = is_x ? viewport.extent.x : viewport.extent.y;
    double value = cmd.args[slot];
    const double tol = 1e-6 * extent;
    if (!std::isfinite(value)) fail(ErrorCode::OutOfViewport, "non-finite coordinate");
    if (value < origin || value > origin + extent) {
      if (!options.clamp && (value < origin - tol || value > origin + extent + tol)) {
        fail(ErrorCode::OutOfViewport, "coordinate " + std::to_string(value) + " outside viewport");
      }
      value = std::clamp(value, origin, origin + extent);
    }
    out.arg_bins[slot] = std::clamp(quantize_coordinate(value, origin, extent), 0, kNumBins - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<SvgPath> split_path(const SvgPath& path, std::size_t max_commands) {
  if (max_commands < 2) fail(ErrorCode::ContractViolation, "split_path needs max_commands >= 2");
  if (path.commands.size() <= max_commands) return {path};

  std::vector<SvgPath> chunks;
  SvgPath chunk;
  chunk.id = path.id;
  chunk.semantic_tag = path.semantic_tag;
  Vec2 current{};
  Vec2 subpath_start{};
  bool subpath_in_chunk = true;

  for (const auto& cmd : path.commands) {
    if (chunk.commands.size() == max_commands) {
      chunks.push_back(std::move(chunk));
      chunk = SvgPath{};
      chunk.id = path.id;
      chunk.semantic_tag = path.semantic_tag;
      subpath_in_chunk = false;
      if (cmd.kind != CommandKind::MoveTo) chunk.commands.push_back(SvgCommand::move_to(current));
    }
    if (cmd.kind == CommandKind::ClosePath && !subpath_in_chunk) {
      // The subpath's MoveTo lives in an earlier chunk; close explicitly.
      chunk.commands.push_back(SvgCommand::line_to(subpath_start));
      current = subpath_start;
      continue;
    }
    chunk.commands.push_back(cmd);
    if (cmd.kind == CommandKind::MoveTo) {
      subpath_start = cmd.end_point();
      subpath_in_chunk = true;
    }
    if (cmd.has_end_point()) current = cmd.end_point();
    if (cmd.kind == CommandKind::ClosePath) current = subpath_start;
  }
  if (!chunk.commands.empty()) chunks.push_back(std::move(chunk));
  return chunks;
}

}  // namespace svgnet::svg
