/*
 * Copyright 2026 The AVDA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the AVDA trainer. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every fallible
 * call returns an avda_status; on failure avda_last_error() holds a message
 * for the calling thread. */

#ifndef AVDA_AVDA_H
#define AVDA_AVDA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AVDA_API __declspec(dllexport)
#else
#define AVDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avda_status {
  AVDA_OK = 0,
  AVDA_ERR_INVALID_ARGUMENT = 1, /* null handle or pointer */
  AVDA_ERR_SHAPE = 2,
  AVDA_ERR_DOMAIN = 3,
  AVDA_ERR_CONTRACT = 4,
  AVDA_ERR_PARAMETER = 5,
  AVDA_ERR_INDEX = 6,
  AVDA_ERR_VALIDATION = 7,
  AVDA_ERR_FORMAT = 8,
  AVDA_ERR_IO = 9,
  AVDA_ERR_NUMERIC = 10,
  AVDA_ERR_BUFFER_TOO_SMALL = 11,
  AVDA_ERR_INTERNAL = 12
} avda_status;

typedef enum avda_domain { AVDA_SOURCE = 0, AVDA_TARGET = 1 } avda_domain;

typedef struct avda_config avda_config;
typedef struct avda_dataset avda_dataset;
typedef struct avda_model avda_model;
typedef struct avda_report avda_report;

AVDA_API const char* avda_version(void);
AVDA_API const char* avda_status_string(avda_status status);
/* Message of the last failed call on this thread; "" when none. */
AVDA_API const char* avda_last_error(void);

/* Text outputs: copied into buf (NUL-terminated) when cap is large enough.
 * *needed, when not null, receives the required size including the NUL.
 * Returns AVDA_ERR_BUFFER_TOO_SMALL otherwise. */

/* ---- configuration ---- */
AVDA_API avda_status avda_config_new(avda_config** out);
AVDA_API avda_status avda_config_load(const char* path, avda_config** out);
AVDA_API avda_status avda_config_set(avda_config* cfg, const char* key, const char* value);
AVDA_API avda_status avda_config_get(const avda_config* cfg, const char* key, char* buf, size_t cap,
                                     size_t* needed);
AVDA_API avda_status avda_config_validate(const avda_config* cfg);
AVDA_API avda_status avda_config_to_text(const avda_config* cfg, char* buf, size_t cap,
                                         size_t* needed);
AVDA_API avda_status avda_config_digest(const avda_config* cfg, uint64_t* out);
AVDA_API void avda_config_free(avda_config* cfg);

/* ---- datasets ---- */
AVDA_API avda_status avda_dataset_generate(const char* preset, uint64_t seed, avda_dataset** source,
                                           avda_dataset** target);
/* classes < 0 infers the class count from the file. */
AVDA_API avda_status avda_dataset_load(const char* path, avda_domain domain, int64_t classes,
                                       avda_dataset** out);
AVDA_API avda_status avda_dataset_save(const avda_dataset* ds, const char* path);
AVDA_API avda_status avda_dataset_info(const avda_dataset* ds, size_t* rows, size_t* dim,
                                       size_t* classes, int* labeled, avda_domain* domain);
AVDA_API void avda_dataset_free(avda_dataset* ds);

/* ---- training ---- */
/* Trains a fresh model on labeled source data. report may be null. */
AVDA_API avda_status avda_train_source(const avda_config* cfg, const avda_dataset* source,
                                       avda_model** model, avda_report** report);
/* Adapts a source-trained model to the target domain with cfg's shots
 * budget; the few-shot split and all adaptation randomness come from seed. */
AVDA_API avda_status avda_adapt(const avda_config* cfg, const avda_model* source_model,
                                const avda_dataset* source, const avda_dataset* target,
                                uint64_t seed, avda_model** adapted, avda_report** report);
/* Writes the shots-curve CSV for the given grid to csv_path. */
AVDA_API avda_status avda_shots_curve(const avda_config* cfg, const avda_model* source_model,
                                      const avda_dataset* source, const avda_dataset* target,
                                      const size_t* shots, size_t n_shots, size_t n_seeds,
                                      const char* csv_path);

/* ---- models ---- */
AVDA_API avda_status avda_model_save(const avda_model* model, const char* path);
AVDA_API avda_status avda_model_load(const char* path, avda_model** out);
/* Copy of the config the model was trained with. */
AVDA_API avda_status avda_model_config(const avda_model* model, avda_config** out);
/* Source-domain data uses the source encoder and classifier, target-domain
 * data the target side. labels must hold one entry per row. */
AVDA_API avda_status avda_model_predict(const avda_model* model, const avda_dataset* ds,
                                        size_t* labels, size_t cap);
AVDA_API avda_status avda_model_accuracy(const avda_model* model, const avda_dataset* ds,
                                         double* out);
AVDA_API avda_status avda_export_embeddings(const avda_model* model, const avda_dataset* ds,
                                            const char* path);
AVDA_API void avda_model_free(avda_model* model);

/* ---- reports ---- */
AVDA_API avda_status avda_report_to_json(const avda_report* report, char* buf, size_t cap,
                                         size_t* needed);
AVDA_API avda_status avda_report_save(const avda_report* report, const char* path);
AVDA_API avda_status avda_report_final_accuracy(const avda_report* report, double* out,
                                                int* present);
AVDA_API void avda_report_free(avda_report* report);

#ifdef __cplusplus
}
#endif

#endif
