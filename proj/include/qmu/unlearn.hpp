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

#ifndef QMU_UNLEARN_HPP_
#define QMU_UNLEARN_HPP_

// Forgetting mechanisms: QFI-weighted influence unlearning (QMU-I),
// one-shot influence deltas, diagonal Fisher steps, QFI-ranked reset with
// partial retraining, and client-level channel forgetting.
//
// Wherever an influence formula calls for a Hessian, the damped QFIM
// (F + lambda I) stands in for it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmu/geo.hpp"
#include "qmu/learn.hpp"
#include "qmu/qcore.hpp"

namespace qmu::unlearn {

// Metric used to precondition unlearning steps. kIdentity replaces F by I.
enum class Metric { kFull, kBlock, kDiagonal, kIdentity };

struct QmuIConfig {
  double step = 0.1;          // eta
  double clip_norm = 1.0;     // C, may be +inf
  double trust_radius = 1.0;  // tau, may be +inf
  double damping = 1e-3;      // lambda
  Metric metric = Metric::kDiagonal;
  std::size_t block_size = 2;
  std::size_t batch_size = 8;  // capped at |D_r|
  int max_iterations = 25;
  learn::TrainConfig fine_tune = DefaultFineTune();

  static learn::TrainConfig DefaultFineTune();
  void Validate() const;
};

struct UnlearnTrace {
  std::string mechanism;
  std::vector<pqc::ParamVector> snapshots;
  // Trace distance to the counterfactual per snapshot; filled by audits.
  std::vector<double> distances;
  // Delta^T (F + lambda I) Delta of every applied QMU-I step.
  std::vector<double> applied_metric_norms;
  std::size_t unlearn_steps = 0;
};

struct UnlearnResult {
  learn::TrainedModel model;
  UnlearnTrace trace;
};

// Counterfactual parameters and probes; when given, trace distances are
// filled as the run proceeds.
struct Reference {
  pqc::ParamVector theta;
  std::vector<std::vector<double>> probes;
};

UnlearnResult QmuI(const learn::TrainedModel& model, const learn::Dataset& data,
                   const QmuIConfig& cfg,
                   const std::optional<Reference>& reference = std::nullopt);

// -(F + lambda I)^{-1} g.
geo::GradVector InfluenceDelta(const geo::Qfim& f, std::span<const double> g,
                               double lambda);
// One-shot removal estimate for rows S, with F averaged over the train
// split (the Hessian's dataset) and the gradient over S.
geo::GradVector InfluenceDelta(const learn::TrainedModel& model,
                               const learn::Dataset& data,
                               std::span<const std::size_t> rows, double lambda,
                               geo::QfimSpec spec = {geo::QfimMode::kFull, 1});

// theta_i - eta g_i / (F_ii + lambda), diagonal QFIM and gradient over S.
pqc::ParamVector FisherStep(const learn::TrainedModel& model,
                            const learn::Dataset& data,
                            std::span<const std::size_t> rows, double eta,
                            double lambda);

// Indices of the ceil(fraction * p) largest diagonal entries, ascending
// index on ties; returned sorted.
std::vector<std::size_t> FisherRankedSelection(const geo::Qfim& f,
                                               double fraction);

// Redraws the selected coordinates uniformly on [-pi, pi] from `p0_seed`
// and fine-tunes only those coordinates on D_s.
UnlearnResult ResetPartial(const learn::TrainedModel& model,
                           const learn::Dataset& data,
                           const std::vector<std::size_t>& selection,
                           std::uint64_t p0_seed,
                           const learn::TrainConfig& fine_tune,
                           const std::optional<Reference>& reference = std::nullopt);

// Traces out the client block and replaces it with I / 2^|block|; the
// complement marginal is untouched.
qcore::DensityMatrix ClientForget(const qcore::DensityMatrix& rho,
                                  std::span<const int> client_block);

const char* MetricName(Metric m);

}  // namespace qmu::unlearn

#endif  // QMU_UNLEARN_HPP_
