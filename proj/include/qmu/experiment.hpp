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

#ifndef QMU_EXPERIMENT_HPP_
#define QMU_EXPERIMENT_HPP_

// Run configuration and end-to-end experiments. Every experiment writes
// report.json and manifest.json into the output directory; the manifest
// records every seed consumed and the SHA-256 of every artifact.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qmu/fed.hpp"
#include "qmu/learn.hpp"
#include "qmu/pqc.hpp"
#include "qmu/privacy.hpp"
#include "qmu/unlearn.hpp"

namespace qmu::experiment {

enum class Kind { kGenData, kTrain, kUnlearn, kRetrain, kAudit, kFed, kKernel,
                  kBench };

Kind ParseKind(std::string_view name);
const char* KindName(Kind k);

struct DatasetSource {
  std::optional<std::filesystem::path> path;
  std::string generator = "two_moons";
  std::size_t n = 100;
  double noise = 0.1;
};

// kind in {none, cluster, class, random, rows, mask}; "mask" keeps the
// forget column of a loaded CSV.
struct ForgetSpec {
  std::string kind = "cluster";
  int label = 1;
  std::size_t size = 15;
  double fraction = 0.1;
  std::vector<std::size_t> rows;
};

struct TemplateSpec {
  int n_qubits = 2;
  int depth = 2;
  pqc::Entangler entangler = pqc::Entangler::kLinear;
  bool reupload = false;
  std::optional<double> noise;
  double data_scale = 1.0;
};

// name in {qmu_i, reset_partial, influence, fisher_step, none}.
struct MechanismSpec {
  std::string name = "qmu_i";
  unlearn::QmuIConfig qmu{};
  double fraction = 0.5;  // reset_partial
  double step = 0.1;      // fisher_step
  double damping = 1e-3;  // influence, fisher_step, parameter-gap bound
  double cert_threshold = 0.05;
};

struct KernelSpec {
  int n_qubits = 2;
  int depth = 1;
  double lambda = 0.1;
};

struct BenchSpec {
  int repeats = 3;
  std::vector<int> qubits{2, 3, 4};
  int depth = 2;
  std::size_t kernel_n = 30;
};

struct AuditSpec {
  std::optional<pqc::ParamVector> theta;
  std::optional<std::filesystem::path> report;
};

struct RunConfig {
  Kind kind = Kind::kTrain;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";
  DatasetSource dataset;
  ForgetSpec forget;
  TemplateSpec circuit;
  learn::TrainConfig train{.learning_rate = 0.1, .epochs = 60};
  MechanismSpec mechanism;
  std::optional<privacy::DPConfig> dp;
  fed::SimulationConfig fed;
  KernelSpec kernel;
  BenchSpec bench;
  AuditSpec audit;

  // Relative paths resolve against `base_dir`. Unknown keys are rejected.
  static RunConfig FromJson(const nlohmann::json& j,
                            const std::filesystem::path& base_dir = {});
  // Canonical echo of the configuration; the output directory is left out
  // so it never affects report digests.
  nlohmann::json ToJson() const;
};

RunConfig LoadConfig(const std::filesystem::path& path);

struct RunResult {
  nlohmann::json report;
  std::string digest;
  std::map<std::string, std::string> artifacts;  // file name -> SHA-256
  std::filesystem::path out_dir;
};

// Requires cfg.seed. Creates the output directory when needed.
RunResult Run(const RunConfig& cfg);

}  // namespace qmu::experiment

#endif  // QMU_EXPERIMENT_HPP_
