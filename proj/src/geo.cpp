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

#include "qmu/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

#include "qmu/common.hpp"

namespace qmu::geo {
namespace {

constexpr double kProbFloor = 1e-12;

void CheckLabel(int label) {
  Require(label == 1 || label == -1, "labels must be +1 or -1");
}

void ApplyMode(Eigen::MatrixXd& m, const QfimSpec& spec) {
  if (spec.mode == QfimMode::kFull) return;
  if (spec.mode == QfimMode::kBlock) {
    Require(spec.block_size >= 1, "QFIM block size must be positive");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i == j) continue;
      const bool keep =
          spec.mode == QfimMode::kBlock &&
          static_cast<std::size_t>(i) / spec.block_size ==
              static_cast<std::size_t>(j) / spec.block_size;
      if (!keep) m(i, j) = 0.0;
    }
  }
}

}  // namespace

double Loss(LossSpec spec, double prediction, int label) {
  CheckLabel(label);
  if (spec.kind == LossKind::kMse) {
    const double r = prediction - label;
    return r * r;
  }
  const double p = std::clamp((1.0 + prediction) / 2.0, kProbFloor,
                              1.0 - kProbFloor);
  const double target = (1.0 + label) / 2.0;
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

double LossDerivative(LossSpec spec, double prediction, int label) {
  CheckLabel(label);
  if (spec.kind == LossKind::kMse) return 2.0 * (prediction - label);
  const double p = std::clamp((1.0 + prediction) / 2.0, kProbFloor,
                              1.0 - kProbFloor);
  const double target = (1.0 + label) / 2.0;
  // dL/dp * dp/df with dp/df = 1/2.
  return 0.5 * (p - target) / (p * (1.0 - p));
}

GradVector ExpectationGradient(const pqc::CircuitTemplate& t,
                               std::span<const double> theta,
                               std::span<const double> x) {
  GradVector g(t.n_params(), 0.0);
  constexpr double kShift = std::numbers::pi / 2.0;
  const auto& gates = t.gates();
  for (std::size_t gi = 0; gi < gates.size(); ++gi) {
    const auto* tr = std::get_if<pqc::Trainable>(&gates[gi].binding);
    if (tr == nullptr) continue;
    const double plus = pqc::PredictShifted(t, theta, x, gi, kShift);
    const double minus = pqc::PredictShifted(t, theta, x, gi, -kShift);
    g[tr->param] += 0.5 * (plus - minus);
  }
  return g;
}

GradVector ParameterShiftGradient(const pqc::CircuitTemplate& t,
                                  std::span<const double> theta,
                                  const Batch& batch, LossSpec loss) {
  Require(!batch.empty(), "gradient needs a non-empty batch");
  GradVector g(t.n_params(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double f = pqc::Predict(t, theta, batch.x[i]);
    const double dl = LossDerivative(loss, f, batch.y[i]);
    const GradVector df = ExpectationGradient(t, theta, batch.x[i]);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += dl * df[k];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : g) v *= inv;
  return g;
}

double BatchLoss(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 const Batch& batch, LossSpec loss) {
  Require(!batch.empty(), "loss needs a non-empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += Loss(loss, pqc::Predict(t, theta, batch.x[i]), batch.y[i]);
  }
  return total / static_cast<double>(batch.size());
}

GradVector FiniteDiffGradient(const pqc::CircuitTemplate& t,
                              std::span<const double> theta,
                              const Batch& batch, LossSpec loss, double h) {
  Require(h > 0.0, "finite-difference step must be positive");
  std::vector<double> work(theta.begin(), theta.end());
  GradVector g(theta.size(), 0.0);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double orig = work[k];
    work[k] = orig + h;
    const double up = BatchLoss(t, work, batch, loss);
    work[k] = orig - h;
    const double down = BatchLoss(t, work, batch, loss);
    work[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

bool Qfim::IsDiagonal() const {
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (i != j && matrix(i, j) != 0.0) return false;
    }
  }
  return true;
}

Qfim ComputeQfim(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 std::span<const double> x, QfimSpec spec) {
  Require(!t.noisy(), "QFIM is defined for noiseless templates only");
  const std::size_t p = t.n_params();
  const qcore::CVector psi = pqc::ExecutePure(t, theta, x).amplitudes();

  // |d_k psi> accumulates over every gate occurrence of parameter k.
  std::vector<qcore::CVector> dpsi(p, qcore::CVector::Zero(psi.size()));
  const auto& gates = t.gates();
  for (std::size_t gi = 0; gi < gates.size(); ++gi) {
    const auto* tr = std::get_if<pqc::Trainable>(&gates[gi].binding);
    if (tr == nullptr) continue;
    dpsi[tr->param] += pqc::ExecuteDerivative(t, theta, x, gi);
  }

  std::vector<qcore::Complex> overlap(p);
  for (std::size_t i = 0; i < p; ++i) overlap[i] = dpsi[i].dot(psi);  // <d_i|psi>
  Eigen::MatrixXd f(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      const qcore::Complex term =
          dpsi[i].dot(dpsi[j]) - overlap[i] * std::conj(overlap[j]);
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      f(ii, jj) = term.real();
      f(jj, ii) = term.real();
    }
  }
  ApplyMode(f, spec);
  return Qfim{std::move(f), 0.0};
}

Qfim ComputeQfim(const pqc::CircuitTemplate& t, std::span<const double> theta,
                 const Batch& batch, QfimSpec spec) {
  Require(!batch.empty(), "QFIM needs a non-empty batch");
  const auto p = static_cast<Eigen::Index>(t.n_params());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    acc += ComputeQfim(t, theta, batch.x[i], spec).matrix;
  }
  acc /= static_cast<double>(batch.size());
  return Qfim{std::move(acc), 0.0};
}

Eigen::MatrixXd DampedInverse(const Qfim& f, double lambda) {
  Require(lambda >= 0.0, "damping must be non-negative");
  Require(f.matrix.rows() == f.matrix.cols(), "QFIM must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.matrix);
  if (es.info() != Eigen::Success) ThrowInvariant("QFIM eigensolver failed");
  Eigen::VectorXd shifted = es.eigenvalues().array() + lambda;
  if (lambda == 0.0) {
    Require(shifted.minCoeff() > 1e-10,
            "QFIM is singular and damping is zero");
  }
  Require(shifted.minCoeff() > 0.0, "damped QFIM is not positive definite");
  Eigen::MatrixXd inv = es.eigenvectors() *
                        shifted.cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  inv = 0.5 * (inv + inv.transpose());
  return inv;
}

GradVector Precondition(const Qfim& f, std::span<const double> g,
                        double lambda) {
  Require(g.size() == f.size(), "gradient and QFIM sizes differ");
  Require(lambda >= 0.0, "damping must be non-negative");
  GradVector out(g.size());
  if (f.IsDiagonal()) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double denom = f.matrix(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(i)) +
                           lambda;
      if (lambda == 0.0) {
        Require(denom > 1e-10, "QFIM is singular and damping is zero");
      }
      Require(denom > 0.0, "damped QFIM is not positive definite");
      out[i] = g[i] / denom;
    }
    return out;
  }
  const Eigen::MatrixXd inv = DampedInverse(f, lambda);
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(),
                                             static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd d = inv * gv;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = d[static_cast<Eigen::Index>(i)];
  }
  return out;
}

pqc::ParamVector NaturalStep(std::span<const double> theta,
                             std::span<const double> g, const Qfim& f,
                             double eta, double lambda) {
  Require(theta.size() == g.size(), "parameter and gradient sizes differ");
  const GradVector delta = Precondition(f, g, lambda);
  pqc::ParamVector out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * delta[i];
  return out;
}

double Norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace qmu::geo
