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

#include "qmu/qkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qmu/common.hpp"
#include "qmu/learn.hpp"

namespace qmu::qkernel {
namespace {

constexpr double kSymTol = 1e-9;
constexpr double kPsdTol = -1e-8;

std::vector<qcore::CVector> Embed(const FeatureMap& fm,
                                  const std::vector<std::vector<double>>& pts) {
  Require(fm.circuit != nullptr, "feature map has no circuit");
  Require(!fm.circuit->noisy(), "kernel feature map must be noiseless");
  std::vector<qcore::CVector> out;
  out.reserve(pts.size());
  for (const auto& x : pts) {
    out.push_back(pqc::ExecutePure(*fm.circuit, fm.theta, x).amplitudes());
  }
  return out;
}

double Overlap(const qcore::CVector& a, const qcore::CVector& b) {
  return std::min(1.0, std::norm(a.dot(b)));
}

void CheckGram(const Eigen::MatrixXd& k, bool unit_diagonal) {
  Require(k.rows() == k.cols() && k.rows() >= 1, "Gram matrix must be square");
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > kSymTol) {
    ThrowInvariant("Gram matrix is not symmetric");
  }
  if (unit_diagonal &&
      (k.diagonal().array() - 1.0).abs().maxCoeff() > kSymTol) {
    ThrowInvariant("Gram matrix diagonal is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k,
                                                    Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kPsdTol) {
    ThrowInvariant("Gram matrix is not positive semidefinite");
  }
}

std::vector<std::size_t> DefaultIds(std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

// Positions of `ids` in the model and of everything else, both ascending.
void Partition(const KernelRidgeModel& model,
               const std::vector<std::size_t>& ids,
               std::vector<Eigen::Index>& keep,
               std::vector<Eigen::Index>& drop) {
  std::vector<bool> del(model.size(), false);
  for (std::size_t id : ids) {
    const std::size_t pos = model.PositionOf(id);
    Require(!del[pos], "duplicate sample id in deletion set");
    del[pos] = true;
  }
  keep.clear();
  drop.clear();
  for (std::size_t i = 0; i < del.size(); ++i) {
    (del[i] ? drop : keep).push_back(static_cast<Eigen::Index>(i));
  }
  Require(!keep.empty(), "cannot delete every sample");
}

}  // namespace

FeatureMap MakeFeatureMap(const pqc::AnsatzOptions& opts, std::uint64_t seed) {
  Require(!opts.noise.has_value(), "kernel feature map must be noiseless");
  auto circuit =
      std::make_shared<const pqc::CircuitTemplate>(pqc::BuildLayeredAnsatz(opts));
  FeatureMap fm{circuit, learn::InitialParams(circuit->n_params(),
                                              DeriveSeed(seed, "feature_map"))};
  return fm;
}

double KernelValue(const FeatureMap& fm, std::span<const double> x,
                   std::span<const double> x_prime) {
  const auto e = Embed(fm, {std::vector<double>(x.begin(), x.end()),
                            std::vector<double>(x_prime.begin(), x_prime.end())});
  return Overlap(e[0], e[1]);
}

void GramMatrix::Validate() const {
  CheckGram(matrix, true);
  Require(samples.size() == size(), "Gram sample labels do not match size");
}

GramMatrix Gram(const FeatureMap& fm,
                const std::vector<std::vector<double>>& points,
                std::vector<std::size_t> samples) {
  Require(!points.empty(), "Gram matrix needs at least one sample");
  if (samples.empty()) samples = DefaultIds(points.size());
  Require(samples.size() == points.size(), "sample labels do not match points");
  const auto e = Embed(fm, points);
  const auto n = static_cast<Eigen::Index>(points.size());
  GramMatrix g{Eigen::MatrixXd::Identity(n, n), std::move(samples)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      g.matrix(i, j) = g.matrix(j, i) = Overlap(e[static_cast<std::size_t>(i)],
                                                 e[static_cast<std::size_t>(j)]);
    }
  }
  g.Validate();
  return g;
}

Eigen::VectorXd KernelVector(const FeatureMap& fm,
                             const std::vector<std::vector<double>>& points,
                             std::span<const double> x) {
  const auto e = Embed(fm, points);
  const qcore::CVector ex =
      pqc::ExecutePure(*fm.circuit, fm.theta, x).amplitudes();
  Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < e.size(); ++i) {
    k(static_cast<Eigen::Index>(i)) = Overlap(e[i], ex);
  }
  return k;
}

std::size_t KernelRidgeModel::PositionOf(std::size_t id) const {
  const auto it = std::find(samples.begin(), samples.end(), id);
  Require(it != samples.end(),
          "sample id " + std::to_string(id) + " is not in the model");
  return static_cast<std::size_t>(it - samples.begin());
}

KernelRidgeModel KrrFit(const GramMatrix& k, const Eigen::VectorXd& y,
                        double lambda) {
  KernelRidgeModel m = KrrFit(k.matrix, y, lambda);
  m.samples = k.samples;
  return m;
}

KernelRidgeModel KrrFit(const Eigen::MatrixXd& k, const Eigen::VectorXd& y,
                        double lambda) {
  Require(lambda > 0.0, "ridge lambda must be positive");
  Require(y.size() == k.rows(), "label vector does not match Gram size");
  CheckGram(k, false);
  const Eigen::Index n = k.rows();
  const Eigen::MatrixXd a = k + lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    ThrowInvariant("kernel ridge system is not positive definite");
  }
  KernelRidgeModel m;
  m.lambda = lambda;
  m.y = y;
  m.inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
  m.inverse = 0.5 * (m.inverse + m.inverse.transpose()).eval();
  m.alpha = llt.solve(y);
  m.samples = DefaultIds(static_cast<std::size_t>(n));
  return m;
}

double KrrPredict(const KernelRidgeModel& model, const Eigen::VectorXd& k_x) {
  Require(k_x.size() == model.alpha.size(),
          "kernel vector does not match model size");
  return k_x.dot(model.alpha);
}

KernelRidgeModel DeleteSamplesSmw(const KernelRidgeModel& model,
                                  const std::vector<std::size_t>& ids) {
  if (ids.empty()) return model;
  std::vector<Eigen::Index> keep, drop;
  Partition(model, ids, keep, drop);
  const Eigen::MatrixXd a_rr = model.inverse(keep, keep);
  const Eigen::MatrixXd a_rd = model.inverse(keep, drop);
  const Eigen::MatrixXd a_dd = model.inverse(drop, drop);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a_dd);
  if (ldlt.info() != Eigen::Success) {
    ThrowInvariant("deleted block of the inverse is singular");
  }
  KernelRidgeModel out;
  out.lambda = model.lambda;
  out.inverse = a_rr - a_rd * ldlt.solve(a_rd.transpose());
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose()).eval();
  out.y = model.y(keep);
  out.alpha = out.inverse * out.y;
  out.samples.reserve(keep.size());
  for (Eigen::Index i : keep) {
    out.samples.push_back(model.samples[static_cast<std::size_t>(i)]);
  }
  return out;
}

double DeviationBound(const KernelRidgeModel& model,
                      const std::vector<std::size_t>& deleted_ids,
                      const Eigen::VectorXd& k_x) {
  Require(k_x.size() == model.alpha.size(),
          "kernel vector does not match model size");
  if (deleted_ids.empty()) return 0.0;
  std::vector<Eigen::Index> keep, drop;
  Partition(model, deleted_ids, keep, drop);
  const KernelRidgeModel after = DeleteSamplesSmw(model, deleted_ids);
  const Eigen::VectorXd alpha_s = model.alpha(keep);
  const Eigen::VectorXd k_s = k_x(keep);
  return k_s.norm() * (after.alpha - alpha_s).norm();
}

double Alignment(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2) {
  Require(k1.rows() == k2.rows() && k1.cols() == k2.cols(),
          "alignment needs matrices of equal shape");
  const double n1 = k1.norm();
  const double n2 = k2.norm();
  Require(n1 > 0.0 && n2 > 0.0, "alignment of a zero matrix is undefined");
  return std::clamp(k1.cwiseProduct(k2).sum() / (n1 * n2), 0.0, 1.0);
}

double Mmd(const Eigen::MatrixXd& k, std::span<const std::size_t> a,
           std::span<const std::size_t> b) {
  Require(!a.empty() && !b.empty(), "MMD needs two non-empty sets");
  const auto n = static_cast<std::size_t>(k.rows());
  auto mean = [&](std::span<const std::size_t> u,
                  std::span<const std::size_t> v) {
    double s = 0.0;
    for (std::size_t i : u) {
      Require(i < n, "MMD index out of range");
      for (std::size_t j : v) {
        Require(j < n, "MMD index out of range");
        s += k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    return s / static_cast<double>(u.size() * v.size());
  };
  const double sq = mean(a, a) + mean(b, b) - 2.0 * mean(a, b);
  return std::sqrt(std::max(0.0, sq));
}

std::string GramToCsv(const GramMatrix& k) {
  std::string out = "sample";
  for (std::size_t id : k.samples) out += ",s" + std::to_string(id);
  out += '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
    out += 's' + std::to_string(k.samples[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < k.matrix.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", k.matrix(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace qmu::qkernel
