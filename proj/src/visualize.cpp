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

#include "svgnet/visualize.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace svgnet::viz {

namespace {

using model::AttentionEntry;
using model::ElementKind;
using svg::Vec2;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string polyline_d(const std::vector<Vec2>& pts) {
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d += (i == 0 ? "M " : " L ") + num(pts[i].x) + " " + num(pts[i].y);
  }
  return d;
}

std::string path_element(const std::string& d, const std::string& stroke, double width, double opacity,
                         const std::string& extra) {
  return "    <path d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
         "\" stroke-opacity=\"" + num(opacity) + "\"" + extra + "/>\n";
}

}  // namespace

double attention_opacity(double score, double max_score) {
  if (!(max_score > 0.0)) return kMinOpacity;
  return kMinOpacity + (1.0 - kMinOpacity) * std::clamp(score / max_score, 0.0, 1.0);
}

std::string render_scene_svg(const scene::NormalizedSample& sample, const eval::Trajectory& prediction,
                             const std::vector<AttentionEntry>& attention, const scene::BatchCaps& caps) {
  std::unordered_map<std::string, double> path_score, agent_score;
  double max_score = 0.0;
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& e : attention) {
    if (e.masked) continue;
    meta.push_back({{"key", e.key},
                    {"kind", e.kind == ElementKind::ScenePath    ? "path"
                             : e.kind == ElementKind::OtherAgent ? "agent"
                                                                 : "main"},
                    {"score", e.score}});
    if (e.kind == ElementKind::ScenePath) path_score[e.key] = e.score;
    if (e.kind == ElementKind::OtherAgent) agent_score[e.key] = e.score;
    if (e.kind != ElementKind::MainAgent) max_score = std::max(max_score, e.score);
  }

  const auto& vp = sample.scene_svg.viewport;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(vp.origin.x) + " " + num(vp.origin.y) + " " +
         num(vp.extent.x) + " " + num(vp.extent.y) + "\" data-scene-id=\"" + xml_escape(sample.scene_id) + "\">\n";
  out += "  <metadata id=\"attention\">" + xml_escape(meta.dump()) + "</metadata>\n";
  out += "  <rect x=\"" + num(vp.origin.x) + "\" y=\"" + num(vp.origin.y) + "\" width=\"" + num(vp.extent.x) +
         "\" height=\"" + num(vp.extent.y) + "\" fill=\"white\"/>\n";
  // flip y about the viewport centre so +y points up
  out += "  <g transform=\"matrix(1 0 0 -1 0 " + num(2.0 * vp.origin.y + vp.extent.y) + ")\">\n";

  scene::BatchCaps all = caps;
  all.max_paths = std::numeric_limits<std::size_t>::max();
  for (const auto& path : scene::batch_paths(sample, all)) {
    const auto it = path_score.find(*path.id);
    const double score = it == path_score.end() ? 0.0 : it->second;
    out += path_element(svg::serialize_path(path), "gray", 0.6, attention_opacity(score, max_score),
                        " class=\"lane\" id=\"" + xml_escape(*path.id) + "\" data-score=\"" + exact(score) +
                            "\"");
  }
  for (const auto& h : sample.other_histories) {
    std::vector<Vec2> pts;
    for (std::size_t t = 0; t < h.positions.size(); ++t) {
      if (h.valid[t]) pts.push_back(h.positions[t]);
    }
    if (pts.size() < 2) continue;
    const auto it = agent_score.find(h.agent_id);
    const double score = it == agent_score.end() ? 0.0 : it->second;
    out += path_element(polyline_d(pts), "darkblue", 0.8, attention_opacity(score, max_score),
                        " class=\"agent\" id=\"agent-" + xml_escape(h.agent_id) + "\" data-score=\"" +
                            exact(score) + "\"");
  }
  out += path_element(polyline_d(sample.main_history), "yellow", 0.8, 1.0, " class=\"history\"");
  if (sample.target) {
    std::vector<Vec2> gt{sample.main_history.back()};
    gt.insert(gt.end(), sample.target->begin(), sample.target->end());
    out += path_element(polyline_d(gt), "red", 0.8, 1.0, " class=\"ground-truth\"");
  }
  if (!prediction.empty()) {
    std::vector<Vec2> pred{sample.main_history.back()};
    pred.insert(pred.end(), prediction.begin(), prediction.end());
    out += path_element(polyline_d(pred), "green", 0.8, 1.0, " class=\"prediction\"");
  }
  out += "  </g>\n";

  const double lx = vp.origin.x + 0.02 * vp.extent.x;
  const double line_h = 0.04 * vp.extent.y;
  const double font = 0.03 * vp.extent.y;
  const std::pair<const char*, const char*> legend[] = {{"gray", "map (opacity = attention)"},
                                                        {"darkblue", "other agents (opacity = attention)"},
                                                        {"yellow", "history"},
                                                        {"red", "ground truth"},
                                                        {"green", "prediction"}};
  out += "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"" + num(font) + "\">\n";
  double y = vp.origin.y + line_h;
  for (const auto& [color, label] : legend) {
    out += "    <rect x=\"" + num(lx) + "\" y=\"" + num(y - font) + "\" width=\"" + num(font) + "\" height=\"" +
           num(font) + "\" fill=\"" + color + "\"/>\n";
    out += "    <text x=\"" + num(lx + 1.5 * font) + "\" y=\"" + num(y) + "\">" + label + "</text>\n";
    y += line_h;
  }
  out += "  </g>\n</svg>\n";
  return out;
}

}  // namespace svgnet::viz
