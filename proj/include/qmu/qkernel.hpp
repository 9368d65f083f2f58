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

#ifndef QMU_QKERNEL_HPP_
#define QMU_QKERNEL_HPP_

// Fidelity kernels over a fixed encoding circuit, kernel ridge regression
// with exact decremental deletion, and kernel drift diagnostics.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmu/pqc.hpp"

namespace qmu::qkernel {

// phi(x) = execute(circuit, theta, x) with theta held fixed.
struct FeatureMap {
  std::shared_ptr<const pqc::CircuitTemplate> circuit;
  pqc::ParamVector theta;
};

// Layered ansatz with parameters drawn uniformly on [-pi, pi] from `seed`.
FeatureMap MakeFeatureMap(const pqc::AnsatzOptions& opts, std::uint64_t seed);

// |<phi(x)|phi(x')>|^2. Throws for noisy templates.
double KernelValue(const FeatureMap& fm, std::span<const double> x,
                   std::span<const double> x_prime);

struct GramMatrix {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> samples;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  // Symmetry and unit diagonal within 1e-9, PSD within -1e-8.
  void Validate() const;
};

// `samples` labels the rows; defaults to 0..N-1.
GramMatrix Gram(const FeatureMap& fm,
                const std::vector<std::vector<double>>& points,
                std::vector<std::size_t> samples = {});

// Kernel values of x against every point.
Eigen::VectorXd KernelVector(const FeatureMap& fm,
                             const std::vector<std::vector<double>>& points,
                             std::span<const double> x);

struct KernelRidgeModel {
  Eigen::VectorXd alpha;
  double lambda = 0.0;
  Eigen::VectorXd y;
  // (K + lambda I)^{-1}, kept for decremental updates.
  Eigen::MatrixXd inverse;
  std::vector<std::size_t> samples;

  std::size_t size() const { return samples.size(); }
  // Position of sample id `id`; throws when absent.
  std::size_t PositionOf(std::size_t id) const;
};

KernelRidgeModel KrrFit(const GramMatrix& k, const Eigen::VectorXd& y,
                        double lambda);
KernelRidgeModel KrrFit(const Eigen::MatrixXd& k, const Eigen::VectorXd& y,
                        double lambda);

// k(x)^T alpha with k(x) ordered like model.samples.
double KrrPredict(const KernelRidgeModel& model, const Eigen::VectorXd& k_x);

// Removes the samples with the given ids using the block-inverse identity
// (K_RR + lambda I)^{-1} = A_RR - A_RD A_DD^{-1} A_DR, A = (K + lambda I)^{-1}.
KernelRidgeModel DeleteSamplesSmw(const KernelRidgeModel& model,
                                  const std::vector<std::size_t>& ids);

// B(x) = ||k_s(x)|| ||alpha' - alpha_s||, restricted to retained samples;
// bounds |f'(x) - f_s(x)| by Cauchy-Schwarz. `k_x` is ordered like the
// pre-deletion model.
double DeviationBound(const KernelRidgeModel& model,
                      const std::vector<std::size_t>& deleted_ids,
                      const Eigen::VectorXd& k_x);

double Alignment(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2);

// sqrt(max(0, mean K_AA + mean K_BB - 2 mean K_AB)).
double Mmd(const Eigen::MatrixXd& k, std::span<const std::size_t> a,
           std::span<const std::size_t> b);

std::string GramToCsv(const GramMatrix& k);

}  // namespace qmu::qkernel

#endif  // QMU_QKERNEL_HPP_
