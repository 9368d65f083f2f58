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

#include "qmu/qmu.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <exception>
#include <memory>
#include <string>

#include "json.hpp"
#include "qmu/common.hpp"
#include "qmu/datasets.hpp"
#include "qmu/experiment.hpp"
#include "qmu/learn.hpp"
#include "qmu/pqc.hpp"
#include "qmu/privacy.hpp"
#include "qmu/qcore.hpp"

struct qmu_dataset {
  qmu::learn::Dataset data;
};
struct qmu_template {
  std::shared_ptr<const qmu::pqc::CircuitTemplate> circuit;
};
struct qmu_model {
  qmu::learn::TrainedModel model;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
qmu_status Guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return QMU_OK;
  } catch (const qmu::Error& e) {
    g_last_error = e.what();
    return static_cast<qmu_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QMU_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QMU_ERR_INTERNAL;
  }
}

void NotNull(const void* p, const char* name) {
  qmu::Require(p != nullptr, std::string(name) + " must not be null");
}

char* CopyString(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qmu::qcore::DensityMatrix ReadDensity(int n, const double* re,
                                      const double* im) {
  NotNull(re, "real part");
  NotNull(im, "imaginary part");
  qmu::Require(n >= 1 && n <= qmu::qcore::kMaxQubits, "n_qubits out of range");
  const Eigen::Index d = Eigen::Index{1} << n;
  qmu::qcore::CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      m(i, j) = {re[i * d + j], im[i * d + j]};
    }
  }
  return qmu::qcore::DensityMatrix(n, std::move(m));
}

qmu_status RunParsed(const char* kind, const nlohmann::json& cfg_json,
                     const std::filesystem::path& base, int has_seed,
                     uint64_t seed, const char* out_dir, char** result) {
  return Guard([&] {
    NotNull(kind, "kind");
    NotNull(result, "result");
    nlohmann::json j = cfg_json;
    if (!j.is_object()) qmu::ThrowValidation("config must be a JSON object");
    if (j.contains("experiment") && j["experiment"] != kind) {
      qmu::ThrowValidation("config field 'experiment' names '" +
                           j["experiment"].dump() +
                           "' but the command is '" + kind + "'");
    }
    j["experiment"] = kind;
    qmu::experiment::RunConfig cfg =
        qmu::experiment::RunConfig::FromJson(j, base);
    if (has_seed) cfg.seed = seed;
    if (out_dir != nullptr) cfg.out_dir = out_dir;
    const qmu::experiment::RunResult r = qmu::experiment::Run(cfg);
    const nlohmann::json summary = {{"experiment", kind},
                                    {"report_digest", r.digest},
                                    {"out_dir", r.out_dir.string()},
                                    {"artifacts", r.artifacts}};
    *result = CopyString(summary.dump());
  });
}

}  // namespace

extern "C" {

const char* qmu_version(void) { return "0.1.0"; }

const char* qmu_last_error(void) { return g_last_error.c_str(); }

void qmu_string_free(char* s) { delete[] s; }

qmu_status qmu_dataset_generate(const char* name, size_t n, double noise,
                                uint64_t seed, qmu_dataset** out) {
  return Guard([&] {
    NotNull(name, "name");
    NotNull(out, "out");
    *out = new qmu_dataset{qmu::data::GenerateDataset(name, n, noise, seed)};
  });
}

qmu_status qmu_dataset_load_csv(const char* path, uint64_t split_seed,
                                qmu_dataset** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new qmu_dataset{qmu::data::LoadCsv(path, split_seed)};
  });
}

qmu_status qmu_dataset_save_csv(const qmu_dataset* data, const char* path) {
  return Guard([&] {
    NotNull(data, "dataset");
    NotNull(path, "path");
    qmu::data::SaveCsv(data->data, path);
  });
}

qmu_status qmu_dataset_info(const qmu_dataset* data, size_t* rows,
                            size_t* features, size_t* train_rows) {
  return Guard([&] {
    NotNull(data, "dataset");
    if (rows) *rows = data->data.size();
    if (features) *features = data->data.n_features();
    if (train_rows) {
      *train_rows = data->data.Indices(qmu::learn::Subset::kTrain).size();
    }
  });
}

void qmu_dataset_free(qmu_dataset* data) { delete data; }

qmu_status qmu_template_layered(int n_qubits, int depth, int ring,
                                int reupload, size_t n_features,
                                qmu_template** out) {
  return Guard([&] {
    NotNull(out, "out");
    qmu::pqc::AnsatzOptions o;
    o.n_qubits = n_qubits;
    o.depth = depth;
    o.entangler =
        ring ? qmu::pqc::Entangler::kRing : qmu::pqc::Entangler::kLinear;
    o.reupload = reupload != 0;
    if (n_features > 0) o.n_features = n_features;
    *out = new qmu_template{std::make_shared<const qmu::pqc::CircuitTemplate>(
        qmu::pqc::BuildLayeredAnsatz(o))};
  });
}

qmu_status qmu_template_from_json(const char* json, qmu_template** out) {
  return Guard([&] {
    NotNull(json, "json");
    NotNull(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      qmu::ThrowValidation(std::string("template is not valid JSON: ") +
                           e.what());
    }
    *out = new qmu_template{std::make_shared<const qmu::pqc::CircuitTemplate>(
        qmu::pqc::TemplateFromJson(j))};
  });
}

qmu_status qmu_template_to_json(const qmu_template* t, char** out) {
  return Guard([&] {
    NotNull(t, "template");
    NotNull(out, "out");
    *out = CopyString(qmu::pqc::TemplateToJson(*t->circuit).dump());
  });
}

size_t qmu_template_num_params(const qmu_template* t) {
  return t == nullptr ? 0 : t->circuit->n_params();
}

void qmu_template_free(qmu_template* t) { delete t; }

qmu_status qmu_train(const qmu_template* t, const qmu_dataset* data,
                     double learning_rate, int epochs, size_t batch_size,
                     uint64_t seed, qmu_model** out) {
  return Guard([&] {
    NotNull(t, "template");
    NotNull(data, "dataset");
    NotNull(out, "out");
    qmu::Require(learning_rate > 0.0, "learning_rate must be positive");
    qmu::Require(batch_size >= 1, "batch_size must be at least 1");
    qmu::learn::TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    *out = new qmu_model{qmu::learn::Train(t->circuit, data->data, cfg)};
  });
}

qmu_status qmu_model_params(const qmu_model* m, double* out, size_t capacity,
                            size_t* count) {
  return Guard([&] {
    NotNull(m, "model");
    const auto& theta = m->model.theta;
    if (count) *count = theta.size();
    if (out == nullptr) return;
    qmu::Require(capacity >= theta.size(), "parameter buffer is too small");
    std::memcpy(out, theta.data(), theta.size() * sizeof(double));
  });
}

qmu_status qmu_model_predict(const qmu_model* m, const double* x,
                             size_t n_features, double* out) {
  return Guard([&] {
    NotNull(m, "model");
    NotNull(x, "x");
    NotNull(out, "out");
    qmu::Require(n_features == m->model.circuit->n_features(),
                 "feature count does not match the template");
    *out = qmu::pqc::Predict(*m->model.circuit, m->model.theta,
                             std::span<const double>(x, n_features));
  });
}

qmu_status qmu_model_accuracy(const qmu_model* m, const qmu_dataset* data,
                              int test_split, double* out) {
  return Guard([&] {
    NotNull(m, "model");
    NotNull(data, "dataset");
    NotNull(out, "out");
    *out = qmu::learn::Evaluate(m->model, data->data,
                                test_split ? qmu::learn::Subset::kTest
                                           : qmu::learn::Subset::kTrain)
               .accuracy;
  });
}

void qmu_model_free(qmu_model* m) { delete m; }

qmu_status qmu_run_experiment(const char* kind, const char* config_path,
                              int has_seed, uint64_t seed, const char* out_dir,
                              char** result) {
  nlohmann::json j;
  std::filesystem::path base;
  const qmu_status st = Guard([&] {
    NotNull(config_path, "config_path");
    std::ifstream in(config_path, std::ios::binary);
    if (!in) qmu::ThrowIo(std::string("cannot open config '") + config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      qmu::ThrowValidation(std::string("config '") + config_path +
                           "' is not valid JSON: " + e.what());
    }
    base = std::filesystem::path(config_path).parent_path();
  });
  if (st != QMU_OK) return st;
  return RunParsed(kind, j, base, has_seed, seed, out_dir, result);
}

qmu_status qmu_run_experiment_json(const char* kind, const char* config_json,
                                   const char* base_dir, int has_seed,
                                   uint64_t seed, const char* out_dir,
                                   char** result) {
  nlohmann::json j;
  const qmu_status st = Guard([&] {
    NotNull(config_json, "config_json");
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      qmu::ThrowValidation(std::string("config is not valid JSON: ") + e.what());
    }
  });
  if (st != QMU_OK) return st;
  return RunParsed(kind, j, base_dir ? base_dir : "", has_seed, seed, out_dir,
                   result);
}

qmu_status qmu_gaussian_sigma(double clip_norm, double epsilon, double delta,
                              double* sigma, int* outside_proof_regime) {
  return Guard([&] {
    NotNull(sigma, "sigma");
    const qmu::privacy::SigmaResult r =
        qmu::privacy::GaussianSigma(clip_norm, epsilon, delta);
    *sigma = r.sigma;
    if (outside_proof_regime) *outside_proof_regime = r.outside_proof_regime;
  });
}

qmu_status qmu_trace_distance(int n_qubits, const double* rho_re,
                              const double* rho_im, const double* sigma_re,
                              const double* sigma_im, double* out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = qmu::qcore::TraceDistance(ReadDensity(n_qubits, rho_re, rho_im),
                                     ReadDensity(n_qubits, sigma_re, sigma_im));
  });
}

}  // extern "C"
