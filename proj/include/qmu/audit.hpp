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

#ifndef QMU_AUDIT_HPP_
#define QMU_AUDIT_HPP_

// Certification and evaluation against the retrained counterfactual, plus
// the unlearning report document.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmu/geo.hpp"
#include "qmu/learn.hpp"
#include "qmu/unlearn.hpp"

namespace qmu::audit {

inline constexpr double kDefaultCertThreshold = 0.05;

using Probes = std::vector<std::vector<double>>;

struct DistanceAudit {
  double trace_before = 0.0;
  double trace_after = 0.0;
  double infidelity_before = 0.0;
  double infidelity_after = 0.0;
  bool contracted = false;  // after < before
  double cert_threshold = kDefaultCertThreshold;
  bool certified = false;  // after <= threshold
};

DistanceAudit AuditDistance(const pqc::CircuitTemplate& t,
                            std::span<const double> theta_before,
                            std::span<const double> theta_after,
                            std::span<const double> theta_ref,
                            const Probes& probes,
                            double cert_threshold = kDefaultCertThreshold);

// ||g|| / (lambda_min(F) + lambda). A heuristic: the QFIM stands in for
// the Hessian.
double ParamGapBound(const geo::Qfim& f, std::span<const double> g,
                     double lambda);
// Gradient over rows S, F averaged over the train split.
double ParamGapBound(const learn::TrainedModel& model,
                     const learn::Dataset& data,
                     std::span<const std::size_t> rows, double lambda,
                     geo::QfimSpec spec = {geo::QfimMode::kFull, 1});

struct MembershipResult {
  double advantage = 0.0;  // TPR - FPR on (members, holdout)
  double auc = 0.5;
  double threshold = 0.0;  // predict member iff loss <= threshold
};

// Loss-threshold attack. The threshold maximizes TPR - FPR on the
// calibration pair and is then applied to (members, holdout).
MembershipResult MembershipInference(std::span<const double> calib_members,
                                     std::span<const double> calib_holdout,
                                     std::span<const double> members,
                                     std::span<const double> holdout);
// Members = D_r, calibration members = D_s, holdout = test split.
MembershipResult MembershipInference(const pqc::CircuitTemplate& t,
                                     std::span<const double> theta,
                                     geo::LossSpec loss,
                                     const learn::Dataset& data);

// P(member loss < holdout loss) + ties / 2.
double LossAuc(std::span<const double> members,
               std::span<const double> holdout);

struct ForgettingCurve {
  std::vector<int> iteration;
  std::vector<double> distance;

  // max - min over the final k points.
  double Flatness(std::size_t k) const;
  std::string ToCsv() const;
};

ForgettingCurve BuildForgettingCurve(const unlearn::UnlearnTrace& trace,
                                     const pqc::CircuitTemplate& t,
                                     std::span<const double> theta_ref,
                                     const Probes& probes);

struct RetentionMetrics {
  double retained_accuracy = 0.0;
  double forget_accuracy = 0.0;
  double test_accuracy = 0.0;
  double retained_delta = 0.0;
  double forget_delta = 0.0;
};

RetentionMetrics Retention(const pqc::CircuitTemplate& t,
                           std::span<const double> theta, geo::LossSpec loss,
                           const learn::Dataset& data,
                           const std::optional<RetentionMetrics>& before =
                               std::nullopt);

struct UnlearnReport {
  std::string mechanism;
  DistanceAudit distance;
  double param_gap_bound = 0.0;
  MembershipResult membership_before;
  MembershipResult membership_after;
  RetentionMetrics retention;
  std::optional<double> kernel_alignment;
  std::optional<double> kernel_mmd;
  nlohmann::json dp_ledger;  // null when no DP was used
  std::map<std::string, std::uint64_t> seeds;
  int n_qubits = 0;
  int depth = 0;
  std::string probe_digest;
  std::string timestamp;

  // Range and Fuchs-van de Graaf checks; throws kInvariant.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Throws a validation error naming the first missing or malformed field.
  static UnlearnReport FromJson(const nlohmann::json& j);
};

std::string ProbeDigest(const Probes& probes);

// SHA-256 of the canonical dump with every "timestamp" and "timings" key
// removed at any depth.
std::string ReportDigest(const nlohmann::json& report);

// Key-sorted, two-space indented document.
std::string CanonicalDump(const nlohmann::json& report);
void WriteText(const std::filesystem::path& path, const std::string& text);
void EmitReport(const nlohmann::json& report, const std::filesystem::path& path);
nlohmann::json ReadReport(const std::filesystem::path& path);

}  // namespace qmu::audit

#endif  // QMU_AUDIT_HPP_
