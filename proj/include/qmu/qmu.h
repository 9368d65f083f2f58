// Copyright 2026 The qmulab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QMU_QMU_H_
#define QMU_QMU_H_

/* C interface to the qmulab library. Objects are opaque handles released
 * with their matching *_free function. Every fallible call returns a
 * qmu_status; on failure qmu_last_error() describes the cause for the
 * calling thread. Strings returned through char** are released with
 * qmu_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(QMU_BUILDING_LIBRARY)
#define QMU_API __attribute__((visibility("default")))
#else
#define QMU_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. */
typedef enum qmu_status {
  QMU_OK = 0,
  QMU_ERR_VALIDATION = 1,
  QMU_ERR_INVARIANT = 2,
  QMU_ERR_IO = 3,
  QMU_ERR_INTERNAL = 4
} qmu_status;

typedef struct qmu_dataset qmu_dataset;
typedef struct qmu_template qmu_template;
typedef struct qmu_model qmu_model;

QMU_API const char* qmu_version(void);
QMU_API const char* qmu_last_error(void);
QMU_API void qmu_string_free(char* s);

/* Datasets. */
QMU_API qmu_status qmu_dataset_generate(const char* name, size_t n,
                                        double noise, uint64_t seed,
                                        qmu_dataset** out);
QMU_API qmu_status qmu_dataset_load_csv(const char* path, uint64_t split_seed,
                                        qmu_dataset** out);
QMU_API qmu_status qmu_dataset_save_csv(const qmu_dataset* data,
                                        const char* path);
QMU_API qmu_status qmu_dataset_info(const qmu_dataset* data, size_t* rows,
                                    size_t* features, size_t* train_rows);
QMU_API void qmu_dataset_free(qmu_dataset* data);

/* Circuit templates. */
QMU_API qmu_status qmu_template_layered(int n_qubits, int depth, int ring,
                                        int reupload, size_t n_features,
                                        qmu_template** out);
QMU_API qmu_status qmu_template_from_json(const char* json, qmu_template** out);
QMU_API qmu_status qmu_template_to_json(const qmu_template* t, char** out);
QMU_API size_t qmu_template_num_params(const qmu_template* t);
QMU_API void qmu_template_free(qmu_template* t);

/* Training and inference. */
QMU_API qmu_status qmu_train(const qmu_template* t, const qmu_dataset* data,
                             double learning_rate, int epochs,
                             size_t batch_size, uint64_t seed,
                             qmu_model** out);
QMU_API qmu_status qmu_model_params(const qmu_model* m, double* out,
                                    size_t capacity, size_t* count);
QMU_API qmu_status qmu_model_predict(const qmu_model* m, const double* x,
                                     size_t n_features, double* out);
QMU_API qmu_status qmu_model_accuracy(const qmu_model* m,
                                      const qmu_dataset* data, int test_split,
                                      double* out);
QMU_API void qmu_model_free(qmu_model* m);

/* Experiments. `kind` is a CLI subcommand name; a config naming another
 * experiment is rejected. has_seed / out_dir override the config when set
 * (out_dir may be NULL). On success *result holds a JSON summary with the
 * report digest and artifact digests. */
QMU_API qmu_status qmu_run_experiment(const char* kind, const char* config_path,
                                      int has_seed, uint64_t seed,
                                      const char* out_dir, char** result);
QMU_API qmu_status qmu_run_experiment_json(const char* kind,
                                           const char* config_json,
                                           const char* base_dir, int has_seed,
                                           uint64_t seed, const char* out_dir,
                                           char** result);

/* Utilities. */
QMU_API qmu_status qmu_gaussian_sigma(double clip_norm, double epsilon,
                                      double delta, double* sigma,
                                      int* outside_proof_regime);
/* Row-major real and imaginary parts of two 2^n x 2^n density matrices. */
QMU_API qmu_status qmu_trace_distance(int n_qubits, const double* rho_re,
                                      const double* rho_im,
                                      const double* sigma_re,
                                      const double* sigma_im, double* out);

#ifdef __cplusplus
}
#endif

#endif /* QMU_QMU_H_ */
