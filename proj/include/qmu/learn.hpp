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

#ifndef QMU_LEARN_HPP_
#define QMU_LEARN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qmu/geo.hpp"
#include "qmu/pqc.hpp"

namespace qmu::learn {

enum class Split { kTrain, kTest };

// Row subsets used throughout: retained = train rows outside the forget
// mask (D_s), forget = masked train rows (D_r).
enum class Subset { kTrain, kTest, kRetained, kForget };

class Dataset {
 public:
  // Throws unless every row has the same width, labels are +/-1 and the
  // forget mask only marks train rows.
  Dataset(std::vector<std::vector<double>> features, std::vector<int> labels,
          std::vector<Split> split, std::vector<bool> forget_mask);

  std::size_t size() const { return labels_.size(); }
  std::size_t n_features() const { return n_features_; }
  const std::vector<std::vector<double>>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<Split>& split() const { return split_; }
  const std::vector<bool>& forget_mask() const { return forget_; }

  std::span<const double> row(std::size_t i) const { return features_[i]; }
  std::vector<std::size_t> Indices(Subset s) const;
  bool InSubset(std::size_t i, Subset s) const;

  geo::Batch MakeBatch(std::span<const std::size_t> rows) const;
  geo::Batch MakeBatch(Subset s) const;
  std::vector<std::vector<double>> Rows(std::span<const std::size_t> rows) const;

  Dataset WithForgetMask(std::vector<bool> mask) const;

 private:
  std::vector<std::vector<double>> features_;
  std::vector<int> labels_;
  std::vector<Split> split_;
  std::vector<bool> forget_;
  std::size_t n_features_ = 0;
};

enum class Optimizer { kGd, kNatural };

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 30;
  std::size_t batch_size = 16;
  Optimizer optimizer = Optimizer::kGd;
  double damping = 1e-3;
  geo::QfimSpec qfim{geo::QfimMode::kFull, 1};
  // Stop after this many epochs without a train-loss improvement; 0 disables.
  int patience = 0;
  std::uint64_t seed = 0;
  geo::LossSpec loss{};
};

struct TrainedModel {
  std::shared_ptr<const pqc::CircuitTemplate> circuit;
  pqc::ParamVector theta;
  std::vector<double> loss_trace;
  std::uint64_t seed = 0;
  geo::LossSpec loss{};
};

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Uniform initial parameters on [-pi, pi] drawn from the config seed.
pqc::ParamVector InitialParams(std::size_t n_params, std::uint64_t seed);

TrainedModel Train(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                   const Dataset& data, const TrainConfig& cfg);

// Same as Train on the retained rows only, from the same initialization.
TrainedModel RetrainCounterfactual(
    std::shared_ptr<const pqc::CircuitTemplate> circuit, const Dataset& data,
    const TrainConfig& cfg);

using EpochCallback =
    std::function<void(int epoch, const pqc::ParamVector& theta)>;

// Mini-batch descent from `theta` over `rows`. Coordinates with
// trainable[i] == false are never written. Zero epochs is allowed and
// returns the input unchanged.
TrainedModel Fit(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                 pqc::ParamVector theta, const Dataset& data,
                 std::span<const std::size_t> rows, const TrainConfig& cfg,
                 const std::vector<bool>& trainable = {},
                 const EpochCallback& on_epoch = {});

Metrics Evaluate(const TrainedModel& model, const Dataset& data, Subset s);
Metrics Evaluate(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 geo::LossSpec loss, const Dataset& data,
                 std::span<const std::size_t> rows);

// sign(0) counts as +1.
inline int SignLabel(double prediction) { return prediction >= 0.0 ? 1 : -1; }

}  // namespace qmu::learn

#endif  // QMU_LEARN_HPP_
