/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PCFSL_PCFSL_H_
#define PCFSL_PCFSL_H_

/* C interface of the pcfsl library.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * fallible call returns a pcfsl_status; on failure pcfsl_last_error() holds
 * a message for the calling thread. Strings handed out through `const char**`
 * out-parameters stay valid until the next pcfsl call on the same thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PCFSL_API __declspec(dllexport)
#else
#define PCFSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pcfsl_status {
  PCFSL_OK = 0,
  PCFSL_ERR_INVALID_ARGUMENT = 1,
  PCFSL_ERR_CONFIG = 2,
  PCFSL_ERR_NOT_FOUND = 3,
  PCFSL_ERR_IO = 4,
  PCFSL_ERR_FORMAT = 5,
  PCFSL_ERR_NUMERIC = 6,
  PCFSL_ERR_INTERNAL = 7
} pcfsl_status;

typedef struct pcfsl_config pcfsl_config;
typedef struct pcfsl_report pcfsl_report;
typedef struct pcfsl_model pcfsl_model;

PCFSL_API const char* pcfsl_version(void);
PCFSL_API const char* pcfsl_status_name(pcfsl_status status);
/* Message of the last failed call on this thread ("" if none). */
PCFSL_API const char* pcfsl_last_error(void);

/* Progress lines (training epochs, suite results). NULL disables logging. */
typedef void (*pcfsl_log_fn)(const char* line, void* user);
PCFSL_API void pcfsl_set_log_callback(pcfsl_log_fn fn, void* user);

/* ---- configuration ---------------------------------------------------- */

PCFSL_API pcfsl_status pcfsl_config_create(pcfsl_config** out);
/* Desk-scale preset on the synthetic benchmark. */
PCFSL_API pcfsl_status pcfsl_config_create_toy(pcfsl_config** out);
PCFSL_API pcfsl_status pcfsl_config_load(const char* path, pcfsl_config** out);
PCFSL_API pcfsl_status pcfsl_config_parse(const char* text, pcfsl_config** out);
PCFSL_API void pcfsl_config_destroy(pcfsl_config* config);

PCFSL_API pcfsl_status pcfsl_config_set(pcfsl_config* config, const char* key, const char* value);
/* "key=value" form. */
PCFSL_API pcfsl_status pcfsl_config_apply(pcfsl_config* config, const char* assignment);
PCFSL_API pcfsl_status pcfsl_config_get(const pcfsl_config* config, const char* key, const char** value);
PCFSL_API pcfsl_status pcfsl_config_text(const pcfsl_config* config, const char** text);
PCFSL_API pcfsl_status pcfsl_config_save(const pcfsl_config* config, const char* path);
PCFSL_API pcfsl_status pcfsl_config_fingerprint(const pcfsl_config* config, const char** hex);
/* One "key<TAB>description" line per key. */
PCFSL_API pcfsl_status pcfsl_config_schema(const char** text);

/* ---- data ------------------------------------------------------------- */

/* Ingests the raw dataset at `raw_root` into the configured cache directory
 * (PCIA_CACHE overrides it). For the synthetic benchmark `raw_root` may be
 * NULL. `summary` receives the split statistics. */
PCFSL_API pcfsl_status pcfsl_prepare_data(const pcfsl_config* config, const char* raw_root, const char** summary);
/* Class lists and instance counts of the configured split; the published
 * lists when no cache has been prepared. */
PCFSL_API pcfsl_status pcfsl_inspect_split(const pcfsl_config* config, const char** summary);

/* ---- training and evaluation ------------------------------------------ */

/* Trains into the configured output directory. `summary` names the
 * checkpoints and the best epoch. */
PCFSL_API pcfsl_status pcfsl_train(const pcfsl_config* config, const char** summary);
PCFSL_API pcfsl_status pcfsl_evaluate(const pcfsl_config* config, const char* checkpoint, pcfsl_report** out);
PCFSL_API pcfsl_status pcfsl_cross_validate(const pcfsl_config* config, const char** summary);
/* Builds ablation tables and embedding plots from the reports in `in_dir`. */
PCFSL_API pcfsl_status pcfsl_report_dir(const char* in_dir, const char* out_dir, size_t* reports_found);

PCFSL_API size_t pcfsl_report_episodes(const pcfsl_report* report);
/* Fraction of correct queries in episode `index`, or -1 when out of range. */
PCFSL_API double pcfsl_report_accuracy(const pcfsl_report* report, size_t index);
/* Percent. */
PCFSL_API double pcfsl_report_mean(const pcfsl_report* report);
PCFSL_API double pcfsl_report_ci95(const pcfsl_report* report);
PCFSL_API pcfsl_status pcfsl_report_save(const pcfsl_report* report, const char* csv_path);
PCFSL_API pcfsl_status pcfsl_report_load(const char* csv_path, pcfsl_report** out);
PCFSL_API void pcfsl_report_destroy(pcfsl_report* report);

/* ---- inference -------------------------------------------------------- */

PCFSL_API pcfsl_status pcfsl_model_load(const pcfsl_config* config, const char* checkpoint, pcfsl_model** out);
PCFSL_API void pcfsl_model_destroy(pcfsl_model* model);
/* Classifies one episode. `xyz` holds (support + query) clouds of `points`
 * points each, x y z interleaved; support clouds are class-major, k_shot per
 * class. Writes one class index per query cloud to `predictions`. */
PCFSL_API pcfsl_status pcfsl_model_classify(pcfsl_model* model, const float* xyz, int points, int support_clouds,
                                            int query_clouds, int* predictions);

/* ---- self test -------------------------------------------------------- */

/* Runs the invariant, gradient and oracle suites (`oracle_trials` random
 * instances per oracle). Each check is logged; `failures` receives the
 * number of failed checks. */
PCFSL_API pcfsl_status pcfsl_selftest(int oracle_trials, int* failures);

#ifdef __cplusplus
}
#endif

#endif /* PCFSL_PCFSL_H_ */
