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

#include "qmu/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qmu/common.hpp"

namespace qmu::learn {

Dataset::Dataset(std::vector<std::vector<double>> features,
                 std::vector<int> labels, std::vector<Split> split,
                 std::vector<bool> forget_mask)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      split_(std::move(split)),
      forget_(std::move(forget_mask)) {
  Require(!features_.empty(), "dataset has no rows");
  Require(labels_.size() == features_.size() &&
              split_.size() == features_.size() &&
              forget_.size() == features_.size(),
          "dataset columns have different lengths");
  n_features_ = features_.front().size();
  Require(n_features_ >= 1, "dataset needs at least one feature");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    Require(features_[i].size() == n_features_,
            "row " + std::to_string(i) + " has the wrong number of features");
    for (double v : features_[i]) {
      Require(std::isfinite(v), "row " + std::to_string(i) +
                                    " contains a non-finite feature");
    }
    Require(labels_[i] == 1 || labels_[i] == -1,
            "row " + std::to_string(i) + ": label must be -1 or 1");
    Require(!(forget_[i] && split_[i] == Split::kTest),
            "row " + std::to_string(i) + ": test rows cannot be forgotten");
  }
}

bool Dataset::InSubset(std::size_t i, Subset s) const {
  switch (s) {
    case Subset::kTrain:
      return split_[i] == Split::kTrain;
    case Subset::kTest:
      return split_[i] == Split::kTest;
    case Subset::kRetained:
      return split_[i] == Split::kTrain && !forget_[i];
    case Subset::kForget:
      return split_[i] == Split::kTrain && forget_[i];
  }
  return false;
}

std::vector<std::size_t> Dataset::Indices(Subset s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (InSubset(i, s)) out.push_back(i);
  }
  return out;
}

geo::Batch Dataset::MakeBatch(std::span<const std::size_t> rows) const {
  geo::Batch b;
  for (std::size_t r : rows) {
    Require(r < size(), "row index out of range");
    b.Add(features_[r], labels_[r]);
  }
  return b;
}

geo::Batch Dataset::MakeBatch(Subset s) const {
  const auto idx = Indices(s);
  return MakeBatch(idx);
}

std::vector<std::vector<double>> Dataset::Rows(
    std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(features_.at(r));
  return out;
}

Dataset Dataset::WithForgetMask(std::vector<bool> mask) const {
  return Dataset(features_, labels_, split_, std::move(mask));
}

pqc::ParamVector InitialParams(std::size_t n_params, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-std::numbers::pi,
                                              std::numbers::pi);
  pqc::ParamVector theta(n_params);
  for (double& v : theta) v = unif(rng);
  return theta;
}

namespace {

void CheckConfig(const TrainConfig& cfg) {
  Require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate),
          "train.lr must be positive");
  Require(cfg.epochs >= 0, "train.epochs must be non-negative");
  Require(cfg.batch_size >= 1, "train.batch_size must be at least 1");
  Require(cfg.damping >= 0.0, "train.damping must be non-negative");
  Require(cfg.patience >= 0, "train.patience must be non-negative");
}

void Step(const pqc::CircuitTemplate& t, pqc::ParamVector& theta,
          const geo::Batch& batch, const TrainConfig& cfg,
          const std::vector<bool>& trainable) {
  const geo::GradVector g =
      geo::ParameterShiftGradient(t, theta, batch, cfg.loss);
  const std::size_t p = theta.size();
  if (cfg.optimizer == Optimizer::kGd) {
    for (std::size_t i = 0; i < p; ++i) {
      if (trainable[i]) theta[i] -= cfg.learning_rate * g[i];
    }
    return;
  }
  const geo::Qfim full = geo::ComputeQfim(t, theta, batch, cfg.qfim);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < p; ++i) {
    if (trainable[i]) active.push_back(i);
  }
  const auto a = static_cast<Eigen::Index>(active.size());
  geo::Qfim sub{Eigen::MatrixXd(a, a), 0.0};
  geo::GradVector gs(active.size());
  for (std::size_t r = 0; r < active.size(); ++r) {
    gs[r] = g[active[r]];
    for (std::size_t c = 0; c < active.size(); ++c) {
      sub.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          full.matrix(static_cast<Eigen::Index>(active[r]),
                      static_cast<Eigen::Index>(active[c]));
    }
  }
  const geo::GradVector delta = geo::Precondition(sub, gs, cfg.damping);
  for (std::size_t r = 0; r < active.size(); ++r) {
    theta[active[r]] -= cfg.learning_rate * delta[r];
  }
}

}  // namespace

TrainedModel Fit(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                 pqc::ParamVector theta, const Dataset& data,
                 std::span<const std::size_t> rows, const TrainConfig& cfg,
                 const std::vector<bool>& trainable,
                 const EpochCallback& on_epoch) {
  CheckConfig(cfg);
  Require(circuit != nullptr, "missing circuit template");
  Require(!rows.empty(), "training rows are empty");
  Require(theta.size() == circuit->n_params(),
          "initial parameters do not match the template");
  Require(data.n_features() == circuit->n_features(),
          "dataset width does not match template n_features");
  Require(cfg.optimizer != Optimizer::kNatural || !circuit->noisy(),
          "natural-gradient training requires a noiseless template");
  std::vector<bool> active =
      trainable.empty() ? std::vector<bool>(theta.size(), true) : trainable;
  Require(active.size() == theta.size(), "trainable mask has the wrong size");

  TrainedModel model;
  model.circuit = circuit;
  model.seed = cfg.seed;
  model.loss = cfg.loss;

  std::vector<std::size_t> order(rows.begin(), rows.end());
  const geo::Batch all = data.MakeBatch(rows);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(DeriveSeed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const geo::Batch batch = data.MakeBatch(
          std::span<const std::size_t>(order.data() + start, end - start));
      Step(*circuit, theta, batch, cfg, active);
    }
    const double loss = geo::BatchLoss(*circuit, theta, all, cfg.loss);
    model.loss_trace.push_back(loss);
    if (on_epoch) on_epoch(epoch, theta);
    if (loss < best) {
      best = loss;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  model.theta = std::move(theta);
  return model;
}

TrainedModel Train(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                   const Dataset& data, const TrainConfig& cfg) {
  Require(cfg.epochs >= 1, "train.epochs must be at least 1");
  Require(circuit != nullptr, "missing circuit template");
  const auto rows = data.Indices(Subset::kTrain);
  Require(!rows.empty(), "train split is empty");
  return Fit(circuit,
             InitialParams(circuit->n_params(), DeriveSeed(cfg.seed, "init")),
             data, rows, cfg);
}

TrainedModel RetrainCounterfactual(
    std::shared_ptr<const pqc::CircuitTemplate> circuit, const Dataset& data,
    const TrainConfig& cfg) {
  Require(cfg.epochs >= 1, "train.epochs must be at least 1");
  Require(circuit != nullptr, "missing circuit template");
  const auto rows = data.Indices(Subset::kRetained);
  Require(!rows.empty(), "retained set D_s is empty");
  return Fit(circuit,
             InitialParams(circuit->n_params(), DeriveSeed(cfg.seed, "init")),
             data, rows, cfg);
}

Metrics Evaluate(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 geo::LossSpec loss, const Dataset& data,
                 std::span<const std::size_t> rows) {
  Require(!rows.empty(), "evaluation split is empty");
  Metrics m;
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    const double f = pqc::Predict(t, theta, data.row(r));
    m.loss += geo::Loss(loss, f, data.labels()[r]);
    if (SignLabel(f) == data.labels()[r]) ++correct;
  }
  m.count = rows.size();
  m.loss /= static_cast<double>(rows.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  return m;
}

Metrics Evaluate(const TrainedModel& model, const Dataset& data, Subset s) {
  const auto rows = data.Indices(s);
  return Evaluate(*model.circuit, model.theta, model.loss, data, rows);
}

}  // namespace qmu::learn
