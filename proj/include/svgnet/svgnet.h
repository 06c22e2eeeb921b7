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

#ifndef SVGNET_SVGNET_H
#define SVGNET_SVGNET_H

/* C interface to libsvgnet. All handles are opaque. Every function that can
 * fail returns an svgnet_status; the message of the last failure on the
 * calling thread is available from svgnet_last_error(). Strings returned
 * through char** out-parameters must be released with svgnet_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SVGNET_API __declspec(dllexport)
#else
#define SVGNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svgnet_status {
  SVGNET_OK = 0,
  SVGNET_ERR_CONFIG = 2,
  SVGNET_ERR_DATA = 3,
  SVGNET_ERR_RUNTIME = 4
} svgnet_status;

typedef enum svgnet_predictor {
  SVGNET_PREDICTOR_MODEL = 0,
  SVGNET_PREDICTOR_CONSTANT_VELOCITY = 1,
  SVGNET_PREDICTOR_ORACLE = 2
} svgnet_predictor;

typedef struct svgnet_config svgnet_config;
typedef struct svgnet_dataset svgnet_dataset;
typedef struct svgnet_model svgnet_model;

/* Receives one loss-log line per finished epoch. */
typedef void (*svgnet_epoch_callback)(const char* epoch_json, void* user);

SVGNET_API const char* svgnet_version(void);
/* Empty string when the last call on this thread succeeded. */
SVGNET_API const char* svgnet_last_error(void);
/* Error kind such as "IoError" or "SchemaError"; empty on success. */
SVGNET_API const char* svgnet_last_error_kind(void);
SVGNET_API void svgnet_string_free(char* s);

/* json_text may be NULL for all defaults. */
SVGNET_API svgnet_status svgnet_config_create(const char* json_text, svgnet_config** out);
SVGNET_API svgnet_status svgnet_config_load(const char* path, svgnet_config** out);
SVGNET_API void svgnet_config_free(svgnet_config* config);
/* Sets both the training and the synthetic-data seed. */
SVGNET_API svgnet_status svgnet_config_set_seed(svgnet_config* config, uint64_t seed);
SVGNET_API svgnet_status svgnet_config_set_input_mode(svgnet_config* config, const char* mode);
SVGNET_API svgnet_status svgnet_config_to_json(const svgnet_config* config, char** out);

SVGNET_API svgnet_status svgnet_synth_generate(const svgnet_config* config, const char* out_path);
SVGNET_API svgnet_status svgnet_import_argoverse(const char* const* csv_paths, size_t n_csv, const char* map_json_path,
                                                 const char* out_path);
/* Canonical path data string for d. */
SVGNET_API svgnet_status svgnet_path_canonicalize(const char* d, char** out);

/* split is "all", "train" or "test"; the latter two read the split ranges
 * from "<path>.manifest.json". Lines failing the schema or normalization
 * are skipped and counted. workers > 1 normalizes records in parallel. */
SVGNET_API svgnet_status svgnet_dataset_load(const char* path, const char* split, const svgnet_config* config,
                                             size_t workers, svgnet_dataset** out);
SVGNET_API size_t svgnet_dataset_size(const svgnet_dataset* dataset);
SVGNET_API size_t svgnet_dataset_skipped(const svgnet_dataset* dataset);
SVGNET_API void svgnet_dataset_free(svgnet_dataset* dataset);

/* use_f64 selects 64-bit arithmetic. */
SVGNET_API svgnet_status svgnet_model_create(const svgnet_config* config, int use_f64, svgnet_model** out);
SVGNET_API svgnet_status svgnet_model_load(const char* checkpoint_dir, int use_f64, svgnet_model** out);
SVGNET_API void svgnet_model_free(svgnet_model* model);
SVGNET_API svgnet_status svgnet_model_set_input_mode(svgnet_model* model, const char* mode);
SVGNET_API svgnet_status svgnet_model_save(const svgnet_model* model, const char* dir);
/* Model configuration as JSON. */
SVGNET_API svgnet_status svgnet_model_config(const svgnet_model* model, char** out);

/* val may be NULL. out_dir receives epoch_NNN/, final/ and loss_log.jsonl. */
SVGNET_API svgnet_status svgnet_train(svgnet_model* model, const svgnet_config* config, const svgnet_dataset* train,
                                      const svgnet_dataset* val, const char* out_dir, svgnet_epoch_callback callback,
                                      void* user);

/* model may be NULL unless predictor is SVGNET_PREDICTOR_MODEL; config may
 * be NULL for default evaluation settings. per_sample_csv may be NULL. */
SVGNET_API svgnet_status svgnet_evaluate(const svgnet_model* model, svgnet_predictor predictor,
                                         const svgnet_dataset* dataset, const svgnet_config* config,
                                         char** report_json, char** per_sample_csv);

/* One JSON line per scene with the predicted city-frame trajectory. */
SVGNET_API svgnet_status svgnet_predict(const svgnet_model* model, const svgnet_dataset* dataset, const char* out_path);

SVGNET_API svgnet_status svgnet_visualize(const svgnet_model* model, const svgnet_dataset* dataset,
                                          const char* scene_id, const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif /* SVGNET_SVGNET_H */
