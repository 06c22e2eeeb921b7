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

#include "svgnet/svgnet.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "svgnet/evaluation.hpp"
#include "svgnet/io.hpp"
#include "svgnet/run_config.hpp"
#include "svgnet/synth.hpp"
#include "svgnet/training.hpp"
#include "svgnet/visualize.hpp"

using namespace svgnet;

struct svgnet_config {
  RunConfig run;
};

struct svgnet_dataset {
  std::vector<scene::NormalizedSample> samples;
  std::size_t skipped = 0;
};

struct svgnet_model {
  std::variant<std::unique_ptr<model::SvgNet<float>>, std::unique_ptr<model::SvgNet<double>>> net;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_kind;

svgnet_status status_of(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return SVGNET_ERR_CONFIG;
    case ErrorCategory::Data: return SVGNET_ERR_DATA;
    default: return SVGNET_ERR_RUNTIME;
  }
}

template <typename F>
svgnet_status guarded(F&& body) {
  g_error.clear();
  g_error_kind.clear();
  try {
    body();
    return SVGNET_OK;
  } catch (const Error& e) {
    g_error = e.what();
    g_error_kind = to_string(e.code());
    return status_of(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    g_error = e.what();
    g_error_kind = "IoError";
    return SVGNET_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    g_error_kind = "OutOfMemory";
    return SVGNET_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_error = e.what();
    g_error_kind = "InternalError";
    return SVGNET_ERR_RUNTIME;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::ContractViolation, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RunConfig config_or_default(const svgnet_config* c) { return c ? c->run : RunConfig{}; }

template <typename F>
auto visit_model(const svgnet_model* m, F&& f) {
  require(m, "model");
  return std::visit([&](const auto& net) { return f(*net); }, m->net);
}

std::vector<scene::NormalizedSample> normalize_all(const std::vector<scene::SceneRecord>& records,
                                                   const scene::NormalizeConfig& cfg, std::size_t workers,
                                                   std::size_t& skipped) {
  std::vector<std::optional<scene::NormalizedSample>> out(records.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < records.size(); i += step) {
      try {
        out[i] = scene::normalize_sample(records[i], cfg);
      } catch (const Error&) {
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, records.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  std::vector<scene::NormalizedSample> samples;
  for (auto& s : out) {
    if (s) {
      samples.push_back(std::move(*s));
    } else {
      ++skipped;
    }
  }
  return samples;
}

std::pair<std::size_t, std::size_t> split_range(const std::filesystem::path& data, const std::string& split) {
  const auto manifest_path = synth::manifest_path_for(data);
  if (!std::filesystem::exists(manifest_path)) {
    fail(ErrorCode::IoError, "split '" + split + "' needs the manifest '" + manifest_path.string() + "'");
  }
  try {
    const auto manifest = nlohmann::json::parse(io::read_file(manifest_path));
    const auto& range = manifest.at("split_ranges").at(split);
    return {range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, "bad manifest '" + manifest_path.string() + "': " + e.what());
  }
}

}  // namespace

extern "C" {

const char* svgnet_version(void) { return "0.1.0"; }
const char* svgnet_last_error(void) { return g_error.c_str(); }
const char* svgnet_last_error_kind(void) { return g_error_kind.c_str(); }
void svgnet_string_free(char* s) { std::free(s); }

svgnet_status svgnet_config_create(const char* json_text, svgnet_config** out) {
  return guarded([&] {
    require(out, "out");
    auto c = std::make_unique<svgnet_config>();
    if (json_text) c->run = parse_run_config(json_text);
    *out = c.release();
  });
}

svgnet_status svgnet_config_load(const char* path, svgnet_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<svgnet_config>();
    c->run = load_run_config(path);
    *out = c.release();
  });
}

void svgnet_config_free(svgnet_config* config) { delete config; }

svgnet_status svgnet_config_set_seed(svgnet_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->run.train.seed = seed;
    config->run.synth.seed = seed;
  });
}

svgnet_status svgnet_config_set_input_mode(svgnet_config* config, const char* mode) {
  return guarded([&] {
    require(config, "config");
    require(mode, "mode");
    try {
      config->run.model.input_mode = model::parse_input_mode(mode);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
  });
}

svgnet_status svgnet_config_to_json(const svgnet_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(to_json(config->run).dump(2));
  });
}

svgnet_status svgnet_synth_generate(const svgnet_config* config, const char* out_path) {
  return guarded([&] {
    require(out_path, "out_path");
    synth::generate_dataset(config_or_default(config).synth, out_path);
  });
}

svgnet_status svgnet_import_argoverse(const char* const* csv_paths, size_t n_csv, const char* map_json_path,
                                      const char* out_path) {
  return guarded([&] {
    require(map_json_path, "map_json_path");
    require(out_path, "out_path");
    if (n_csv > 0) require(csv_paths, "csv_paths");
    std::vector<std::filesystem::path> csvs;
    for (size_t i = 0; i < n_csv; ++i) {
      require(csv_paths[i], "csv path");
      csvs.emplace_back(csv_paths[i]);
    }
    scene::import_argoverse_csv(csvs, map_json_path, out_path);
  });
}

svgnet_status svgnet_path_canonicalize(const char* d, char** out) {
  return guarded([&] {
    require(d, "d");
    require(out, "out");
    *out = dup_string(svg::serialize_path(svg::parse_path_data(d)));
  });
}

svgnet_status svgnet_dataset_load(const char* path, const char* split, const svgnet_config* config, size_t workers,
                                  svgnet_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const std::string which = split ? split : "all";
    if (which != "all" && which != "train" && which != "test") {
      fail(ErrorCode::ConfigError, "split must be all, train or test, got '" + which + "'");
    }
    const RunConfig run = config_or_default(config);
    std::size_t begin = 0, end = SIZE_MAX;
    if (which != "all") std::tie(begin, end) = split_range(path, which);

    auto ds = std::make_unique<svgnet_dataset>();
    std::vector<scene::SceneRecord> records;
    scene::DatasetReader reader(path);
    scene::LoadedLine line;
    std::size_t index = 0;
    while (reader.next(line)) {
      const std::size_t i = index++;
      if (i < begin || i >= end) continue;
      if (line.record) {
        records.push_back(std::move(*line.record));
      } else {
        ++ds->skipped;
      }
    }
    scene::NormalizeConfig norm;
    norm.t_obs = run.model.t_obs;
    norm.t_pred = run.model.t_pred;
    ds->samples = normalize_all(records, norm, workers, ds->skipped);
    *out = ds.release();
  });
}

size_t svgnet_dataset_size(const svgnet_dataset* dataset) { return dataset ? dataset->samples.size() : 0; }
size_t svgnet_dataset_skipped(const svgnet_dataset* dataset) { return dataset ? dataset->skipped : 0; }
void svgnet_dataset_free(svgnet_dataset* dataset) { delete dataset; }

svgnet_status svgnet_model_create(const svgnet_config* config, int use_f64, svgnet_model** out) {
  return guarded([&] {
    require(out, "out");
    const RunConfig run = config_or_default(config);
    auto m = std::make_unique<svgnet_model>();
    if (use_f64) {
      m->net = std::make_unique<model::SvgNet<double>>(run.model);
    } else {
      m->net = std::make_unique<model::SvgNet<float>>(run.model);
    }
    *out = m.release();
  });
}

svgnet_status svgnet_model_load(const char* checkpoint_dir, int use_f64, svgnet_model** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    auto m = std::make_unique<svgnet_model>();
    if (use_f64) {
      m->net = std::make_unique<model::SvgNet<double>>(train::load_checkpoint<double>(checkpoint_dir));
    } else {
      m->net = std::make_unique<model::SvgNet<float>>(train::load_checkpoint<float>(checkpoint_dir));
    }
    *out = m.release();
  });
}

void svgnet_model_free(svgnet_model* model) { delete model; }

svgnet_status svgnet_model_set_input_mode(svgnet_model* m, const char* mode) {
  return guarded([&] {
    require(m, "model");
    require(mode, "mode");
    model::InputMode parsed;
    try {
      parsed = model::parse_input_mode(mode);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
    std::visit([&](auto& net) { net->set_input_mode(parsed); }, m->net);
  });
}

svgnet_status svgnet_model_save(const svgnet_model* m, const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    visit_model(m, [&](const auto& net) { train::save_checkpoint(dir, net); });
  });
}

svgnet_status svgnet_model_config(const svgnet_model* m, char** out) {
  return guarded([&] {
    require(out, "out");
    *out = dup_string(visit_model(m, [](const auto& net) { return model::to_json(net.config()).dump(2); }));
  });
}

svgnet_status svgnet_train(svgnet_model* m, const svgnet_config* config, const svgnet_dataset* train_ds,
                           const svgnet_dataset* val_ds, const char* out_dir, svgnet_epoch_callback callback,
                           void* user) {
  return guarded([&] {
    require(m, "model");
    require(train_ds, "train");
    const RunConfig run = config_or_default(config);
    train::TrainOptions options;
    if (out_dir) options.out_dir = out_dir;
    if (callback) {
      options.on_epoch = [&](const train::EpochLog& log) { callback(train::to_json(log).dump().c_str(), user); };
    }
    const std::vector<scene::NormalizedSample> none;
    std::visit([&](auto& net) { train::train(*net, train_ds->samples, val_ds ? val_ds->samples : none, run.train,
                                             options); },
               m->net);
  });
}

svgnet_status svgnet_evaluate(const svgnet_model* m, svgnet_predictor predictor, const svgnet_dataset* dataset,
                              const svgnet_config* config, char** report_json, char** per_sample_csv) {
  return guarded([&] {
    require(dataset, "dataset");
    require(report_json, "report_json");
    eval::EvalConfig ec = config_or_default(config).eval;
    eval::MetricsReport report;
    switch (predictor) {
      case SVGNET_PREDICTOR_MODEL:
        report = visit_model(m, [&](const auto& net) {
          ec.t_pred = net.config().t_pred;
          return eval::evaluate(eval::model_predictor(net), dataset->samples, ec);
        });
        break;
      case SVGNET_PREDICTOR_CONSTANT_VELOCITY:
        report = eval::evaluate(eval::constant_velocity_predictor(ec.t_pred, ec.k_vel), dataset->samples, ec);
        break;
      case SVGNET_PREDICTOR_ORACLE:
        report = eval::evaluate(eval::oracle_predictor(), dataset->samples, ec);
        break;
      default:
        fail(ErrorCode::ConfigError, "unknown predictor");
    }
    nlohmann::json j = eval::to_json(report);
    if (predictor == SVGNET_PREDICTOR_MODEL) {
      j["input_mode"] = visit_model(m, [](const auto& net) { return std::string(model::to_string(net.config().input_mode)); });
    }
    j["predictor"] = predictor == SVGNET_PREDICTOR_MODEL                ? "model"
                     : predictor == SVGNET_PREDICTOR_CONSTANT_VELOCITY ? "constant_velocity"
                                                                        : "oracle";
    *report_json = dup_string(j.dump(2));
    if (per_sample_csv) *per_sample_csv = dup_string(eval::per_sample_csv(report));
  });
}

svgnet_status svgnet_predict(const svgnet_model* m, const svgnet_dataset* dataset, const char* out_path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out_path, "out_path");
    const auto predictions = visit_model(m, [&](const auto& net) { return eval::predict(net, dataset->samples); });
    const int t_obs = visit_model(m, [](const auto& net) { return net.config().t_obs; });
    std::string text;
    for (std::size_t i = 0; i < dataset->samples.size(); ++i) {
      const auto& s = dataset->samples[i];
      nlohmann::json line = nlohmann::json::object();
      line["scene_id"] = s.scene_id;
      line["agent_id"] = s.main_agent_id;
      nlohmann::json positions = nlohmann::json::array();
      for (std::size_t t = 0; t < predictions[i].size(); ++t) {
        const auto p = s.frame_to_city.apply(predictions[i][t]);
        positions.push_back({t_obs + static_cast<int>(t), p.x, p.y});
      }
      line["positions"] = std::move(positions);
      text += line.dump() + "\n";
    }
    io::write_file_atomic(out_path, text);
  });
}

svgnet_status svgnet_visualize(const svgnet_model* m, const svgnet_dataset* dataset, const char* scene_id,
                               const char* out_svg) {
  return guarded([&] {
    require(dataset, "dataset");
    require(scene_id, "scene_id");
    require(out_svg, "out_svg");
    const scene::NormalizedSample* sample = nullptr;
    for (const auto& s : dataset->samples) {
      if (s.scene_id == scene_id) {
        sample = &s;
        break;
      }
    }
    if (!sample) fail(ErrorCode::SceneNotFound, std::string("scene '") + scene_id + "' is not in the dataset");
    const std::string svg_text = visit_model(m, [&](const auto& net) {
      const auto& cfg = net.config();
      const auto batch = scene::make_batch({*sample}, cfg.caps, cfg.t_obs, cfg.t_pred);
      const auto result = net.forward(batch, true);
      const auto& attention = model::extract_attention(result);
      std::vector<double> row(cfg.d_out);
      for (std::size_t j = 0; j < cfg.d_out; ++j) row[j] = static_cast<double>(result.predictions.value()[j]);
      return viz::render_scene_svg(*sample, eval::unflatten(row), attention.samples.front(), cfg.caps);
    });
    io::write_file_atomic(out_svg, svg_text);
  });
}

}  // extern "C"
