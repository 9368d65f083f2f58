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

#include "qmu/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "qmu/common.hpp"
#include "qmu/privacy.hpp"

namespace qmu::unlearn {
namespace {

geo::Qfim MetricAt(const learn::TrainedModel& model, const geo::Batch& batch,
                   Metric metric, std::size_t block_size) {
  const auto p = static_cast<Eigen::Index>(model.theta.size());
  switch (metric) {
    case Metric::kIdentity:
      return geo::Qfim{Eigen::MatrixXd::Identity(p, p), 0.0};
    case Metric::kFull:
      return geo::ComputeQfim(*model.circuit, model.theta, batch,
                              {geo::QfimMode::kFull, 1});
    case Metric::kBlock:
      return geo::ComputeQfim(*model.circuit, model.theta, batch,
                              {geo::QfimMode::kBlock, block_size});
    case Metric::kDiagonal:
      return geo::ComputeQfim(*model.circuit, model.theta, batch,
                              {geo::QfimMode::kDiagonal, 1});
  }
  return {};
}

double MetricNormSquared(const geo::Qfim& f, std::span<const double> delta,
                         double lambda) {
  const Eigen::Map<const Eigen::VectorXd> d(
      delta.data(), static_cast<Eigen::Index>(delta.size()));
  return d.dot(f.matrix * d) + lambda * d.squaredNorm();
}

void RecordSnapshot(UnlearnTrace& trace, const learn::TrainedModel& model,
                    const pqc::ParamVector& theta,
                    const std::optional<Reference>& reference) {
  trace.snapshots.push_back(theta);
  if (reference) {
    trace.distances.push_back(pqc::CompareModels(*model.circuit, theta,
                                                 reference->theta,
                                                 reference->probes)
                                  .trace_distance);
  }
}

}  // namespace

const char* MetricName(Metric m) {
  switch (m) {
    case Metric::kFull:
      return "full";
    case Metric::kBlock:
      return "block";
    case Metric::kDiagonal:
      return "diagonal";
    case Metric::kIdentity:
      return "identity";
  }
  return "?";
}

learn::TrainConfig QmuIConfig::DefaultFineTune() {
  learn::TrainConfig c;
  c.learning_rate = 0.05;
  c.epochs = 30;
  c.batch_size = 16;
  c.optimizer = learn::Optimizer::kNatural;
  c.damping = 1e-3;
  // The full metric couples loss-invisible parameters into the update and
  // drifts them away from the retrained reference; the diagonal does not.
  c.qfim = {geo::QfimMode::kDiagonal, 1};
  c.patience = 5;
  return c;
}

void QmuIConfig::Validate() const {
  Require(step > 0.0, "mechanism.step must be positive");
  Require(clip_norm > 0.0, "mechanism.clip_norm must be positive");
  Require(trust_radius > 0.0, "mechanism.trust_radius must be positive");
  Require(damping >= 0.0, "mechanism.damping must be non-negative");
  Require(batch_size >= 1, "mechanism.batch_size must be at least 1");
  Require(max_iterations >= 0, "mechanism.iterations must be non-negative");
  Require(metric != Metric::kBlock || block_size >= 1,
          "mechanism.block_size must be positive");
}

UnlearnResult QmuI(const learn::TrainedModel& model, const learn::Dataset& data,
                   const QmuIConfig& cfg,
                   const std::optional<Reference>& reference) {
  cfg.Validate();
  const auto forget = data.Indices(learn::Subset::kForget);
  Require(!forget.empty(), "forget set D_r is empty");

  UnlearnResult out;
  out.trace.mechanism = "qmu_i";
  learn::TrainedModel current = model;
  RecordSnapshot(out.trace, current, current.theta, reference);

  const std::size_t b = std::min(cfg.batch_size, forget.size());
  std::vector<std::size_t> rows(b);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t j = 0; j < b; ++j) {
      rows[j] = forget[(static_cast<std::size_t>(it) * b + j) % forget.size()];
    }
    const geo::Batch batch = data.MakeBatch(rows);
    geo::GradVector g = geo::ParameterShiftGradient(
        *current.circuit, current.theta, batch, current.loss);
    g = privacy::Clip(g, cfg.clip_norm);
    const geo::Qfim f = MetricAt(current, batch, cfg.metric, cfg.block_size);
    geo::GradVector delta = geo::Precondition(f, g, cfg.damping);
    double norm_sq = MetricNormSquared(f, delta, cfg.damping);
    if (std::isfinite(cfg.trust_radius) &&
        norm_sq > cfg.trust_radius * cfg.trust_radius) {
      const double scale = cfg.trust_radius / std::sqrt(norm_sq);
      for (double& v : delta) v *= scale;
      norm_sq = MetricNormSquared(f, delta, cfg.damping);
    }
    out.trace.applied_metric_norms.push_back(norm_sq);
    for (std::size_t i = 0; i < delta.size(); ++i) {
      current.theta[i] -= cfg.step * delta[i];
    }
    ++out.trace.unlearn_steps;
    RecordSnapshot(out.trace, current, current.theta, reference);
  }

  if (cfg.fine_tune.epochs > 0) {
    const auto retained = data.Indices(learn::Subset::kRetained);
    Require(!retained.empty(), "retained set D_s is empty");
    learn::TrainConfig ft = cfg.fine_tune;
    learn::TrainedModel tuned = learn::Fit(
        current.circuit, current.theta, data, retained, ft, {},
        [&](int, const pqc::ParamVector& theta) {
          RecordSnapshot(out.trace, current, theta, reference);
        });
    current.theta = std::move(tuned.theta);
  }
  out.model = std::move(current);
  return out;
}

geo::GradVector InfluenceDelta(const geo::Qfim& f, std::span<const double> g,
                               double lambda) {
  geo::GradVector d = geo::Precondition(f, g, lambda);
  for (double& v : d) v = -v;
  return d;
}

geo::GradVector InfluenceDelta(const learn::TrainedModel& model,
                               const learn::Dataset& data,
                               std::span<const std::size_t> rows, double lambda,
                               geo::QfimSpec spec) {
  Require(!rows.empty(), "influence target set is empty");
  const geo::Batch target = data.MakeBatch(rows);
  const geo::GradVector g = geo::ParameterShiftGradient(
      *model.circuit, model.theta, target, model.loss);
  const geo::Qfim f = geo::ComputeQfim(*model.circuit, model.theta,
                                       data.MakeBatch(learn::Subset::kTrain),
                                       spec);
  return InfluenceDelta(f, g, lambda);
}

pqc::ParamVector FisherStep(const learn::TrainedModel& model,
                            const learn::Dataset& data,
                            std::span<const std::size_t> rows, double eta,
                            double lambda) {
  Require(!rows.empty(), "Fisher step target set is empty");
  const geo::Batch target = data.MakeBatch(rows);
  const geo::GradVector g = geo::ParameterShiftGradient(
      *model.circuit, model.theta, target, model.loss);
  const geo::Qfim f = geo::ComputeQfim(*model.circuit, model.theta, target,
                                       {geo::QfimMode::kDiagonal, 1});
  return geo::NaturalStep(model.theta, g, f, eta, lambda);
}

std::vector<std::size_t> FisherRankedSelection(const geo::Qfim& f,
                                               double fraction) {
  Require(fraction > 0.0 && fraction <= 1.0,
          "selection fraction must lie in (0, 1]");
  const std::size_t p = f.size();
  Require(p >= 1, "QFIM is empty");
  const auto k = std::min<std::size_t>(
      p, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(p))));
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return f.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) >
           f.matrix(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

UnlearnResult ResetPartial(const learn::TrainedModel& model,
                           const learn::Dataset& data,
                           const std::vector<std::size_t>& selection,
                           std::uint64_t p0_seed,
                           const learn::TrainConfig& fine_tune,
                           const std::optional<Reference>& reference) {
  Require(!selection.empty(), "reset selection is empty");
  std::vector<bool> selected(model.theta.size(), false);
  for (std::size_t i : selection) {
    Require(i < model.theta.size(), "reset index out of range");
    Require(!selected[i], "reset selection contains duplicates");
    selected[i] = true;
  }

  UnlearnResult out;
  out.trace.mechanism = "reset_partial";
  learn::TrainedModel current = model;
  RecordSnapshot(out.trace, current, current.theta, reference);

  Rng rng(p0_seed);
  std::uniform_real_distribution<double> unif(-std::numbers::pi,
                                              std::numbers::pi);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i]) current.theta[i] = unif(rng);
  }
  RecordSnapshot(out.trace, current, current.theta, reference);

  if (fine_tune.epochs > 0) {
    const auto retained = data.Indices(learn::Subset::kRetained);
    Require(!retained.empty(), "retained set D_s is empty");
    learn::TrainedModel tuned = learn::Fit(
        current.circuit, current.theta, data, retained, fine_tune, selected,
        [&](int, const pqc::ParamVector& theta) {
          RecordSnapshot(out.trace, current, theta, reference);
        });
    current.theta = std::move(tuned.theta);
  }
  out.model = std::move(current);
  return out;
}

qcore::DensityMatrix ClientForget(const qcore::DensityMatrix& rho,
                                  std::span<const int> client_block) {
  const int n = rho.n_qubits();
  Require(!client_block.empty(), "client block is empty");
  std::vector<bool> in_block(static_cast<std::size_t>(n), false);
  for (int q : client_block) {
    Require(q >= 0 && q < n, "client block qubit out of range");
    Require(!in_block[static_cast<std::size_t>(q)],
            "client block has duplicate qubits");
    in_block[static_cast<std::size_t>(q)] = true;
  }
  std::vector<int> rest;
  for (int q = 0; q < n; ++q) {
    if (!in_block[static_cast<std::size_t>(q)]) rest.push_back(q);
  }
  Require(!rest.empty(), "client block covers every qubit; nothing retained");

  const qcore::DensityMatrix marginal = qcore::PartialTrace(rho, rest);
  const std::size_t dim = rho.dim();
  const std::size_t block_dim = std::size_t{1} << client_block.size();
  // Index of the retained-register basis state embedded in a full index.
  auto rest_index = [&](std::size_t full) {
    std::size_t r = 0;
    for (int q : rest) {
      r = (r << 1) | ((full >> (n - 1 - q)) & 1U);
    }
    return r;
  };
  std::size_t block_mask = 0;
  for (int q : client_block) block_mask |= std::size_t{1} << (n - 1 - q);

  qcore::CMatrix out = qcore::CMatrix::Zero(rho.matrix().rows(),
                                            rho.matrix().cols());
  const double w = 1.0 / static_cast<double>(block_dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if ((i & block_mask) != (j & block_mask)) continue;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          w * marginal.matrix()(static_cast<Eigen::Index>(rest_index(i)),
                                static_cast<Eigen::Index>(rest_index(j)));
    }
  }
  return qcore::MakeTrustedDensity(n, std::move(out));
}

}  // namespace qmu::unlearn
