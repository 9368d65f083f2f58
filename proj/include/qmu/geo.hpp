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

#ifndef QMU_GEO_HPP_
#define QMU_GEO_HPP_

// Exact parameter-shift gradients, quantum Fisher information matrices and
// geometry-aware update steps.
//
// QFIM convention: F_ij = Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>],
// i.e. one quarter of the usual quantum Fisher information. A single RY on
// |0> has F = 0.25.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "qmu/pqc.hpp"

namespace qmu::geo {

enum class LossKind { kMse, kLogistic };

struct LossSpec {
  LossKind kind = LossKind::kMse;
};

// mse: (f - y)^2. logistic: cross-entropy of p = (1 + f)/2 against the
// target (1 + y)/2, with p clamped away from {0, 1}.
double Loss(LossSpec spec, double prediction, int label);
double LossDerivative(LossSpec spec, double prediction, int label);

// Non-owning view over labelled samples.
struct Batch {
  std::vector<std::span<const double>> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  void Add(std::span<const double> features, int label) {
    x.push_back(features);
    y.push_back(label);
  }
};

using GradVector = std::vector<double>;

// d<O>/d theta for one input, via the two-term shift rule summed over every
// gate occurrence of each parameter.
GradVector ExpectationGradient(const pqc::CircuitTemplate& t,
                               std::span<const double> theta,
                               std::span<const double> x);

// Batch-mean gradient of the loss; throws on an empty batch.
GradVector ParameterShiftGradient(const pqc::CircuitTemplate& t,
                                  std::span<const double> theta,
                                  const Batch& batch, LossSpec loss);

double BatchLoss(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 const Batch& batch, LossSpec loss);

// Central differences of BatchLoss. Test oracle.
GradVector FiniteDiffGradient(const pqc::CircuitTemplate& t,
                              std::span<const double> theta,
                              const Batch& batch, LossSpec loss, double h);

enum class QfimMode { kFull, kBlock, kDiagonal };

struct QfimSpec {
  QfimMode mode = QfimMode::kFull;
  std::size_t block_size = 1;  // kBlock only
};

struct Qfim {
  Eigen::MatrixXd matrix;
  double damping = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  bool IsDiagonal() const;
};

// Pure-state QFIM at one input; throws for noisy templates.
Qfim ComputeQfim(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 std::span<const double> x, QfimSpec spec = {});
// Mean over the inputs of a batch.
Qfim ComputeQfim(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 const Batch& batch, QfimSpec spec = {});

// (F + lambda I)^{-1}. Throws when lambda == 0 and F is singular (smallest
// eigenvalue <= 1e-10).
Eigen::MatrixXd DampedInverse(const Qfim& f, double lambda);

// (F + lambda I)^{-1} g. Diagonal F is handled coordinate-wise.
GradVector Precondition(const Qfim& f, std::span<const double> g,
                        double lambda);

// theta - eta (F + lambda I)^{-1} g.
pqc::ParamVector NaturalStep(std::span<const double> theta,
                             std::span<const double> g, const Qfim& f,
                             double eta, double lambda);

double Norm2(std::span<const double> v);

}  // namespace qmu::geo

#endif  // QMU_GEO_HPP_
