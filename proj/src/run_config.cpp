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

#include "svgnet/run_config.hpp"

#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "svgnet/io.hpp"

namespace svgnet {

void RunConfig::validate() const {
  model.validate();
  train.validate();
  synth.validate();
  if (!(eval.miss_threshold > 0.0)) fail(ErrorCode::ConfigError, "eval.miss_threshold must be positive");
  if (eval.k_vel < 1 || eval.k_vel >= model.t_obs) fail(ErrorCode::ConfigError, "eval.k_vel must lie in [1, t_obs)");
  if (synth.t_obs != model.t_obs || synth.total_frames != model.t_obs + model.t_pred) {
    fail(ErrorCode::ConfigError, "synth frame counts must equal model t_obs and t_obs + t_pred");
  }
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  j["model"] = model::to_json(c.model);
  j["train"] = train::to_json(c.train);
  j["synth"] = synth::to_json(c.synth);
  j["eval"] = {{"miss_threshold", c.eval.miss_threshold}, {"k_vel", c.eval.k_vel}};
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::ObjectReader r(j, "config");
  if (const auto* m = r.child("model")) c.model = model::model_config_from_json(*m);
  if (const auto* t = r.child("train")) c.train = train::train_config_from_json(*t);
  if (const auto* s = r.child("synth")) c.synth = synth::synth_config_from_json(*s);
  if (const auto* e = r.child("eval")) {
    detail::ObjectReader er(*e, "eval");
    er.get("miss_threshold", c.eval.miss_threshold);
    er.get("k_vel", c.eval.k_vel);
    er.finish();
  }
  r.finish();
  c.eval.t_pred = c.model.t_pred;
  c.validate();
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, std::string("cannot read config: ") + e.what());
  }
  return parse_run_config(text);
}

}  // namespace svgnet
