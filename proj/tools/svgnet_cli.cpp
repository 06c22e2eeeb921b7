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

// svgnet command-line entry point. Links only the C interface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "svgnet/svgnet.h"

namespace {

struct Failure {
  svgnet_status status;
};

void check(svgnet_status s, const char* what) {
  if (s == SVGNET_OK) return;
  spdlog::error("{}: {}", what, svgnet_last_error());
  throw Failure{s};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<svgnet_config, svgnet_config_free>;
using Dataset = Handle<svgnet_dataset, svgnet_dataset_free>;
using Model = Handle<svgnet_model, svgnet_model_free>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { svgnet_string_free(s); }
};

struct Options {
  std::string config;
  std::string data;
  std::string split = "all";
  std::string val_data;
  std::string val_split = "all";
  std::string out;
  std::string checkpoint;
  std::string input_mode;
  std::string scene_id;
  std::string map;
  std::string per_sample;
  std::string predictor = "model";
  std::vector<std::string> csv;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool f64 = false;
};

void load_config(const Options& o, Config& cfg) {
  if (o.config.empty()) {
    check(svgnet_config_create(nullptr, cfg.out()), "config");
  } else {
    check(svgnet_config_load(o.config.c_str(), cfg.out()), "config");
  }
  if (o.seed) check(svgnet_config_set_seed(cfg.get(), *o.seed), "--seed");
  if (!o.input_mode.empty()) check(svgnet_config_set_input_mode(cfg.get(), o.input_mode.c_str()), "--input-mode");
  if (spdlog::should_log(spdlog::level::debug)) {
    OwnedString text;
    check(svgnet_config_to_json(cfg.get(), &text.s), "config");
    spdlog::debug("effective config {}", text.s);
  }
}

void load_dataset(const std::string& path, const std::string& split, const Config& cfg, std::size_t workers,
                  Dataset& ds) {
  check(svgnet_dataset_load(path.c_str(), split.c_str(), cfg.get(), workers, ds.out()), "data");
  const std::size_t skipped = svgnet_dataset_skipped(ds.get());
  if (skipped > 0) spdlog::warn("{}: skipped {} unusable records", path, skipped);
  spdlog::info("{} [{}]: {} scenes", path, split, svgnet_dataset_size(ds.get()));
}

void load_model(const Options& o, Model& m) {
  check(svgnet_model_load(o.checkpoint.c_str(), o.f64 ? 1 : 0, m.out()), "checkpoint");
  if (!o.input_mode.empty()) check(svgnet_model_set_input_mode(m.get(), o.input_mode.c_str()), "--input-mode");
}

void write_text(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
      spdlog::error("cannot write '{}'", path);
      throw Failure{SVGNET_ERR_DATA};
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    spdlog::error("cannot write '{}': {}", path, ec.message());
    throw Failure{SVGNET_ERR_DATA};
  }
}

void cmd_synth(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  check(svgnet_synth_generate(cfg.get(), o.out.c_str()), "synth-gen");
  spdlog::info("wrote {}", o.out);
}

void cmd_import(const Options& o) {
  std::vector<std::string> files;
  for (const auto& c : o.csv) {
    if (std::filesystem::is_directory(c)) {
      std::vector<std::string> found;
      for (const auto& e : std::filesystem::directory_iterator(c)) {
        if (e.path().extension() == ".csv") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(c);
    }
  }
  std::vector<const char*> ptrs;
  for (const auto& f : files) ptrs.push_back(f.c_str());
  check(svgnet_import_argoverse(ptrs.data(), ptrs.size(), o.map.c_str(), o.out.c_str()), "import-argoverse");
  spdlog::info("imported {} sequences into {}", files.size(), o.out);
}

void log_epoch(const char* line, void*) { spdlog::info("epoch {}", line); }

void cmd_train(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  Dataset train, val;
  load_dataset(o.data, o.split, cfg, o.workers, train);
  if (!o.val_data.empty()) load_dataset(o.val_data, o.val_split, cfg, o.workers, val);
  Model m;
  check(svgnet_model_create(cfg.get(), o.f64 ? 1 : 0, m.out()), "model");
  check(svgnet_train(m.get(), cfg.get(), train.get(), val.get(), o.out.c_str(), log_epoch, nullptr), "train");
  spdlog::info("checkpoints in {}", o.out);
}

svgnet_predictor parse_predictor(const std::string& name) {
  if (name == "model") return SVGNET_PREDICTOR_MODEL;
  if (name == "cv") return SVGNET_PREDICTOR_CONSTANT_VELOCITY;
  return SVGNET_PREDICTOR_ORACLE;
}

void cmd_eval(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  const auto predictor = parse_predictor(o.predictor);
  Model m;
  if (predictor == SVGNET_PREDICTOR_MODEL) {
    if (o.checkpoint.empty()) {
      spdlog::error("eval with the model predictor needs --checkpoint");
      throw Failure{SVGNET_ERR_CONFIG};
    }
    load_model(o, m);
  }
  Dataset ds;
  load_dataset(o.data, o.split, cfg, o.workers, ds);
  OwnedString report, csv;
  check(svgnet_evaluate(m.get(), predictor, ds.get(), cfg.get(), &report.s, o.per_sample.empty() ? nullptr : &csv.s),
        "eval");
  std::cout << report.s << "\n";
  if (!o.out.empty()) write_text(o.out, std::string(report.s) + "\n");
  if (!o.per_sample.empty()) write_text(o.per_sample, csv.s);
}

void cmd_predict(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  Model m;
  load_model(o, m);
  Dataset ds;
  load_dataset(o.data, o.split, cfg, o.workers, ds);
  check(svgnet_predict(m.get(), ds.get(), o.out.c_str()), "predict");
  spdlog::info("wrote {} predictions to {}", svgnet_dataset_size(ds.get()), o.out);
}

void cmd_visualize(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  Model m;
  load_model(o, m);
  Dataset ds;
  load_dataset(o.data, o.split, cfg, o.workers, ds);
  check(svgnet_visualize(m.get(), ds.get(), o.scene_id.c_str(), o.out.c_str()), "visualize");
  spdlog::info("wrote {}", o.out);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("svgnet");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("SVGNET_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"SVG-Net trajectory forecasting"};
  app.set_version_flag("--version", svgnet_version());
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> modes{"hist", "hist+scene", "hist+scene+agents"};
  const std::vector<std::string> splits{"all", "train", "test"};
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed for training and synthetic data");
    sub->add_option("--workers", o.workers, "Parallel record normalization")->check(CLI::PositiveNumber);
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "Dataset JSONL")->required();
    sub->add_option("--split", o.split, "Manifest split")->check(CLI::IsMember(splits));
    sub->add_option("--input-mode", o.input_mode, "Model inputs")->check(CLI::IsMember(modes));
    sub->add_flag("--f64", o.f64, "64-bit verification mode");
  };

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--out", o.out, "Output JSONL")->required();

  auto* import = app.add_subcommand("import-argoverse", "Convert Argoverse-style CSV sequences");
  import->add_option("--csv", o.csv, "CSV files or directories")->required();
  import->add_option("--map", o.map, "City map JSON")->required();
  import->add_option("--out", o.out, "Output JSONL")->required();

  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train);
  add_data(train);
  train->add_option("--val-data", o.val_data, "Validation JSONL");
  train->add_option("--val-split", o.val_split, "Validation manifest split")->check(CLI::IsMember(splits));
  train->add_option("--out-dir", o.out, "Checkpoint directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or baseline");
  add_common(eval);
  add_data(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  eval->add_option("--predictor", o.predictor, "model, cv or oracle")
      ->check(CLI::IsMember({"model", "cv", "oracle"}));
  eval->add_option("--out", o.out, "Report JSON");
  eval->add_option("--per-sample", o.per_sample, "Per-sample CSV");

  auto* predict = app.add_subcommand("predict", "Write city-frame predictions");
  add_common(predict);
  add_data(predict);
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  predict->add_option("--out", o.out, "Output JSONL")->required();

  auto* viz = app.add_subcommand("visualize", "Render one scene with attention as SVG");
  add_common(viz);
  add_data(viz);
  viz->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  viz->add_option("--scene-id", o.scene_id, "Scene to render")->required();
  viz->add_option("--out", o.out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : SVGNET_ERR_CONFIG;
  }

  try {
    if (*synth) cmd_synth(o);
    if (*import) cmd_import(o);
    if (*train) cmd_train(o);
    if (*eval) cmd_eval(o);
    if (*predict) cmd_predict(o);
    if (*viz) cmd_visualize(o);
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  }
  return 0;
}
