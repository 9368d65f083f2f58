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

#include <cmath>

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace qmu::geo {
namespace {

double OracleZ0(const pqc::CircuitTemplate& t, std::span<const double> theta,
                std::span<const double> x) {
  const oracle::Vec psi = oracle::Statevector(t, theta, x);
  const oracle::Mat z = oracle::Embed(oracle::Pauli('Z'), 0, t.n_qubits());
  return psi.dot(z * psi).real();
}

TEST(LossTest, DerivativesMatchDifferences) {
  const double h = 1e-6;
  for (LossKind k : {LossKind::kMse, LossKind::kLogistic}) {
    for (double f : {-0.8, -0.1, 0.3, 0.9}) {
      for (int y : {-1, 1}) {
        const double fd = (Loss({k}, f + h, y) - Loss({k}, f - h, y)) / (2 * h);
        EXPECT_NEAR(LossDerivative({k}, f, y), fd, 1e-6);
      }
    }
  }
  EXPECT_DOUBLE_EQ(Loss({LossKind::kMse}, 0.5, -1), 2.25);
  EXPECT_NEAR(Loss({LossKind::kLogistic}, 0.0, 1), std::log(2.0), 1e-12);
}

TEST(GradientTest, ExpectationGradientMatchesOracleDifferences) {
  const double h = 1e-5;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = fixture::RandomCircuit(1 + s % 4, 1 + s % 5, s + 40);
    auto theta = fixture::RandomVector(t.n_params(), s);
    const auto x = fixture::RandomVector(2, s + 1, 1.5);
    const GradVector g = ExpectationGradient(t, theta, x);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (OracleZ0(t, tp, x) - OracleZ0(t, tm, x)) / (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-8) << "seed " << s << " param " << i;
    }
  }
}

TEST(GradientTest, BatchGradientMatchesOracleLoss) {
  const auto t = fixture::RandomCircuit(3, 3, 77);
  const auto theta = fixture::RandomVector(t.n_params(), 78);
  const std::vector<std::vector<double>> xs{{0.1, 0.5}, {-0.9, 1.2}, {0.4, -0.2}};
  const std::vector<int> ys{1, -1, 1};
  Batch b;
  for (std::size_t i = 0; i < xs.size(); ++i) b.Add(xs[i], ys[i]);
  auto oracle_loss = [&](const std::vector<double>& th) {
    double s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = OracleZ0(t, th, xs[i]);
      s += (f - ys[i]) * (f - ys[i]);
    }
    return s / xs.size();
  };
  EXPECT_NEAR(BatchLoss(t, theta, b, {}), oracle_loss(theta), 1e-10);
  const GradVector g = ParameterShiftGradient(t, theta, b, {});
  const double h = 1e-5;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    EXPECT_NEAR(g[i], (oracle_loss(tp) - oracle_loss(tm)) / (2 * h), 1e-8);
  }
  EXPECT_THROW(ParameterShiftGradient(t, theta, Batch{}, {}), Error);
}

TEST(QfimTest, SingleRotationIsOneQuarter) {
  const pqc::CircuitTemplate t(
      1, {{pqc::GateKind::kRY, {0}, pqc::Trainable{0}}}, 1, 1,
      qcore::Observable::Z(1, 0));
  for (double a : {0.0, 0.7, -2.0}) {
    const std::vector<double> theta{a}, x{0.0};
    EXPECT_NEAR(ComputeQfim(t, theta, x).matrix(0, 0), 0.25, 1e-9);
  }
}

TEST(QfimTest, MatchesDifferencedGeometricTensor) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto t = fixture::RandomCircuit(1 + s % 3, 1 + s % 4, s + 300);
    const auto theta = fixture::RandomVector(t.n_params(), s + 301);
    const auto x = fixture::RandomVector(2, s + 302, 1.5);
    const Qfim f = ComputeQfim(t, theta, x);
    EXPECT_LT((f.matrix - oracle::QfimFd(t, theta, x)).cwiseAbs().maxCoeff(), 1e-7)
        << s;
  }
}

TEST(QfimTest, SymmetricPsdAndModesAreRestrictions) {
  const auto t = fixture::RandomCircuit(3, 3, 5);
  const auto theta = fixture::RandomVector(t.n_params(), 6);
  Batch b;
  const std::vector<std::vector<double>> xs{{0.3, 0.1}, {-0.5, 0.8}};
  for (const auto& x : xs) b.Add(x, 1);
  const Qfim full = ComputeQfim(t, theta, b);
  EXPECT_LT((full.matrix - full.matrix.transpose()).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full.matrix);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);

  const Qfim diag = ComputeQfim(t, theta, b, {QfimMode::kDiagonal, 1});
  EXPECT_TRUE(diag.IsDiagonal());
  EXPECT_LT((diag.matrix.diagonal() - full.matrix.diagonal()).norm(), 1e-12);

  const Qfim block = ComputeQfim(t, theta, b, {QfimMode::kBlock, 2});
  for (Eigen::Index i = 0; i < block.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.matrix.cols(); ++j) {
      const double expect = i / 2 == j / 2 ? full.matrix(i, j) : 0.0;
      EXPECT_NEAR(block.matrix(i, j), expect, 1e-12);
    }
  }
}

TEST(QfimTest, FubiniStudyOverlapMatchesQuadraticForm) {
  int within = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = fixture::RandomCircuit(2 + s % 2, 2 + s % 3, s + 500);
    const auto theta = fixture::RandomVector(t.n_params(), s + 501);
    const auto x = fixture::RandomVector(2, s + 502, 1.5);
    auto eps = fixture::RandomVector(t.n_params(), s + 503, 1.0);
    const double norm = Norm2(eps);
    Eigen::VectorXd e(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) e(i) = eps[i] * 1e-3 / norm;
    auto shifted = theta;
    for (std::size_t i = 0; i < eps.size(); ++i) shifted[i] += e(i);
    const double overlap =
        1.0 - std::norm(oracle::Statevector(t, theta, x)
                            .dot(oracle::Statevector(t, shifted, x)));
    const double quad = e.dot(ComputeQfim(t, theta, x).matrix * e);
    within += std::abs(overlap - quad) <= 0.01 * quad;
  }
  EXPECT_EQ(within, 20);
}

TEST(PreconditionTest, SolvesDampedSystem) {
  Eigen::MatrixXd a(3, 3);
  a << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 0.5;
  const Qfim f{a, 0.0};
  const std::vector<double> g{1.0, -2.0, 0.5};
  const GradVector x = Precondition(f, g, 0.1);
  const Eigen::VectorXd r =
      (a + 0.1 * Eigen::MatrixXd::Identity(3, 3)) *
          Eigen::Map<const Eigen::VectorXd>(x.data(), 3) -
      Eigen::Map<const Eigen::VectorXd>(g.data(), 3);
  EXPECT_LT(r.norm(), 1e-12);

  const std::vector<double> theta{0.0, 1.0, 2.0};
  const auto next = NaturalStep(theta, g, f, 0.5, 0.1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(next[i], theta[i] - 0.5 * x[i], 1e-12);
}

TEST(PreconditionTest, UndampedSingularMetricIsRejected) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  EXPECT_THROW(DampedInverse(Qfim{a, 0.0}, 0.0), Error);
  EXPECT_NO_THROW(DampedInverse(Qfim{a, 0.0}, 1e-3));
}

}  // namespace
}  // namespace qmu::geo
