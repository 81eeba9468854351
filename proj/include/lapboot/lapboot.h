// Copyright 2026 The lapboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAPBOOT_LAPBOOT_H_
#define LAPBOOT_LAPBOOT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define LB_API __declspec(dllexport)
#else
#define LB_API __attribute__((visibility("default")))
#endif

typedef enum lb_status {
  LB_OK = 0,
  LB_ERR_INVALID_ARGUMENT = 1,
  LB_ERR_STRUCTURAL = 2,
  LB_ERR_PARSE = 3,
  LB_ERR_IO = 4,
  LB_ERR_NUMERICAL = 5,
  LB_ERR_PROTOCOL = 6,
  LB_ERR_INTERNAL = 7
} lb_status;

typedef struct lb_config lb_config;
typedef struct lb_dataset lb_dataset;
typedef struct lb_plan_set lb_plan_set;
typedef struct lb_model lb_model;

// Receives one JSON metrics record per epoch.
typedef void (*lb_epoch_callback)(const char* metrics_json, void* user);

LB_API const char* lb_version(void);
LB_API const char* lb_status_string(lb_status status);
// Message for the last failing call on this thread; empty after success.
LB_API const char* lb_last_error(void);

// Strings and buffers returned through out-parameters are owned by the
// caller.
LB_API void lb_string_free(char* s);
LB_API void lb_buffer_free(double* data);

// Configuration (key=value; see lb_config_to_text for every key).
LB_API lb_status lb_config_new(lb_config** out);
LB_API lb_status lb_config_load(const char* path, lb_config** out);
LB_API lb_status lb_config_set(lb_config* cfg, const char* key, const char* value);
LB_API lb_status lb_config_get(const lb_config* cfg, const char* key, char** value);
LB_API lb_status lb_config_validate(const lb_config* cfg);
LB_API lb_status lb_config_to_text(const lb_config* cfg, char** text);
LB_API void lb_config_free(lb_config* cfg);

// Datasets.
LB_API lb_status lb_dataset_load(const lb_config* cfg, lb_dataset** out);
LB_API lb_status lb_dataset_load_edgelist(const char* edges, const char* features,
                                          const char* labels, const char* splits,
                                          lb_dataset** out);
LB_API lb_status lb_dataset_save(const lb_dataset* ds, const char* manifest_path);
// {"task", "graphs", "nodes", "edges", "feature_dim", "warnings"}.
LB_API lb_status lb_dataset_info(const lb_dataset* ds, char** json);
// kind is "random" or "dice".
LB_API lb_status lb_dataset_attack(const lb_dataset* ds, const char* kind, double sigma,
                                   uint64_t seed, lb_dataset** out, size_t* flips);
LB_API void lb_dataset_free(lb_dataset* ds);

// Augmentation plans, one per graph.
LB_API lb_status lb_augment(const lb_dataset* ds, const lb_config* cfg, lb_plan_set** out);
LB_API lb_status lb_plans_save(const lb_plan_set* plans, const char* dir);
LB_API lb_status lb_plans_load(const char* dir, size_t count, lb_plan_set** out);
// Per-plan budget, K, final losses and trace lengths.
LB_API lb_status lb_plans_summary(const lb_plan_set* plans, char** json);
LB_API void lb_plans_free(lb_plan_set* plans);

// Training. `resume` may be NULL. With checkpoint_every > 0 the config's
// checkpoint path is rewritten at that cadence; a non-finite loss leaves a
// snapshot at "<checkpoint>.abort".
LB_API lb_status lb_train(const lb_dataset* ds, const lb_plan_set* plans, const lb_config* cfg,
                          const lb_model* resume, lb_epoch_callback on_epoch, void* user,
                          lb_model** out);
LB_API lb_status lb_model_load(const char* path, lb_model** out);
LB_API lb_status lb_model_save(const lb_model* model, const char* path);
// {"epoch", "seed", "config_hash", "config"}.
LB_API lb_status lb_model_info(const lb_model* model, char** json);
// Row-major student embeddings of the clean graphs; free with lb_buffer_free.
LB_API lb_status lb_model_embeddings(const lb_model* model, const lb_dataset* ds, double** data,
                                     size_t* rows, size_t* cols);
LB_API void lb_model_free(lb_model* model);

// Evaluation report as JSON, and its text rendering.
LB_API lb_status lb_evaluate(const lb_model* model, const lb_dataset* ds, const lb_config* cfg,
                             char** report_json);
LB_API lb_status lb_report_to_text(const char* report_json, char** text);

LB_API lb_status lb_bench(const lb_config* cfg, char** report_json, char** text);

#ifdef __cplusplus
}
#endif

#endif  // LAPBOOT_LAPBOOT_H_
