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

// Hand-checkable metric and baseline cases, shared by the unit tests and the
// acceptance runner.

#include <cmath>
#include <string>
#include <vector>

#include "svgnet/evaluation.hpp"

namespace svgnet::testing {

struct MetricCase {
  std::string name;
  double got;
  double expected;
};

inline std::vector<MetricCase> metric_cases() {
  using eval::Trajectory;
  auto line = [](double ox, double oy) {
    Trajectory t;
    for (int i = 1; i <= 30; ++i) t.push_back({0.7 * i + ox, -0.2 * i * i + oy});
    return t;
  };
  const Trajectory gt = line(0, 0);
  Trajectory last_only = gt;
  last_only.back().x += 1.0;
  Trajectory all_but_last = line(2, -1);
  all_but_last.back() = gt.back();

  std::vector<MetricCase> c;
  c.push_back({"ade identical", eval::ade(gt, gt), 0.0});
  c.push_back({"ade offset (3,4)", eval::ade(line(3, 4), gt), 5.0});
  c.push_back({"ade last step (1,0)", eval::ade(last_only, gt), 1.0 / 30.0});
  c.push_back({"fde identical", eval::fde(gt, gt), 0.0});
  c.push_back({"fde final (0,2)", eval::fde(line(0, 2), gt), 2.0});
  c.push_back({"fde early offsets", eval::fde(all_but_last, gt), 0.0});

  const std::vector<double> f1 = {1.0, 3.0}, f2 = {2.0}, f3 = {5.0, 5.0, 5.0};
  c.push_back({"miss_rate [1,3]", eval::miss_rate(f1), 0.5});
  c.push_back({"miss_rate fde == 2", eval::miss_rate(f2), 0.0});
  c.push_back({"miss_rate all 5", eval::miss_rate(f3), 1.0});

  Trajectory hist;
  for (int i = 0; i < 20; ++i) hist.push_back({0.0, static_cast<double>(i - 9)});
  const auto cv = eval::constant_velocity_baseline(hist, 30, 1);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) worst = std::max(worst, std::hypot(cv[t].x, cv[t].y - (11.0 + t)));
  c.push_back({"cv (0,9),(0,10) k=1", worst, 0.0});

  const Trajectory still(20, {4.5, -2.0});
  worst = 0.0;
  for (const auto& p : eval::constant_velocity_baseline(still)) worst = std::max(worst, std::hypot(p.x - 4.5, p.y + 2.0));
  c.push_back({"cv stationary", worst, 0.0});

  Trajectory path, future;
  for (int i = 0; i < 20; ++i) path.push_back({1.5 * i - 3.0, 0.25 * i + 1.0});
  for (int i = 20; i < 50; ++i) future.push_back({1.5 * i - 3.0, 0.25 * i + 1.0});
  c.push_back({"cv ade on a line", eval::ade(eval::constant_velocity_baseline(path), future), 0.0});
  return c;
}

}  // namespace svgnet::testing
