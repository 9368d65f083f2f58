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

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace qmu::qkernel {
namespace {

FeatureMap Map(int n = 2, int depth = 1, std::uint64_t seed = 3) {
  pqc::AnsatzOptions o;
  o.n_qubits = n;
  o.depth = depth;
  o.n_features = 2;
  return MakeFeatureMap(o, seed);
}

std::vector<std::vector<double>> Points(std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> p;
  for (std::size_t i = 0; i < n; ++i) {
    p.push_back(fixture::RandomVector(2, DeriveSeed(seed, "pt", i), 1.5));
  }
  return p;
}

Eigen::VectorXd Labels(std::size_t n, std::uint64_t seed) {
  const auto v = fixture::RandomVector(n, seed, 1.0);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = v[i] >= 0 ? 1.0 : -1.0;
  return y;
}

TEST(KernelTest, ValueIsStateOverlap) {
  const FeatureMap fm = Map(3, 2);
  const auto pts = Points(6, 1);
  for (const auto& a : pts) {
    for (const auto& b : pts) {
      const double overlap =
          std::norm(oracle::Statevector(*fm.circuit, fm.theta, a)
                        .dot(oracle::Statevector(*fm.circuit, fm.theta, b)));
      EXPECT_NEAR(KernelValue(fm, a, b), overlap, 1e-12);
    }
  }
}

TEST(KernelTest, GramIsSymmetricUnitDiagonalPsd) {
  const GramMatrix k = Gram(Map(), Points(25, 2));
  EXPECT_NO_THROW(k.Validate());
  EXPECT_EQ(k.samples.front(), 0u);
  EXPECT_EQ(k.samples.back(), 24u);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.matrix);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);

  GramMatrix broken = k;
  broken.matrix(0, 1) += 0.1;
  EXPECT_THROW(broken.Validate(), Error);
}

TEST(KernelTest, NoisyMapsAreRejected) {
  pqc::AnsatzOptions o;
  o.n_features = 2;
  o.noise = 0.1;
  EXPECT_THROW(MakeFeatureMap(o, 1), Error);
  const auto noisy =
      std::make_shared<const pqc::CircuitTemplate>(pqc::BuildLayeredAnsatz(o));
  const FeatureMap fm{noisy, pqc::ParamVector(noisy->n_params(), 0.3)};
  const std::vector<double> x{0.1, 0.2};
  EXPECT_THROW(KernelValue(fm, x, x), Error);
}

TEST(KrrTest, FitMatchesDirectSolve) {
  const GramMatrix k = Gram(Map(), Points(20, 4));
  const Eigen::VectorXd y = Labels(20, 5);
  const KernelRidgeModel m = KrrFit(k, y, 0.1);
  EXPECT_LT((m.alpha - oracle::KrrSolve(k.matrix, y, 0.1)).cwiseAbs().maxCoeff(),
            1e-10);
  const auto probe = fixture::RandomVector(2, 6, 1.5);
  const Eigen::VectorXd kx = KernelVector(Map(), Points(20, 4), probe);
  EXPECT_NEAR(KrrPredict(m, kx), kx.dot(m.alpha), 1e-12);
  EXPECT_THROW(KrrFit(k, y, 0.0), Error);
  EXPECT_THROW(KrrFit(k, Labels(19, 5), 0.1), Error);
}

TEST(KrrTest, DeletionMatchesRetrainAndIsOrderFree) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 10 + 3 * s;
    const GramMatrix k = Gram(Map(2, 1, s), Points(n, s));
    const Eigen::VectorXd y = Labels(n, s + 50);
    const KernelRidgeModel m = KrrFit(k, y, 0.05);
    const std::vector<std::size_t> del{1, n - 1, n / 2};

    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(del.begin(), del.end(), i) == del.end()) keep.push_back(i);
    }
    const Eigen::VectorXd direct =
        oracle::KrrSolve(k.matrix(keep, keep), y(keep), 0.05);

    const KernelRidgeModel batch = DeleteSamplesSmw(m, del);
    EXPECT_LT((batch.alpha - direct).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(batch.size(), keep.size());

    KernelRidgeModel seq = m;
    for (std::size_t id : del) seq = DeleteSamplesSmw(seq, {id});
    EXPECT_EQ(seq.samples, batch.samples);
    EXPECT_LT((seq.alpha - batch.alpha).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KrrTest, DeletionAddressesSamplesById) {
  const GramMatrix k = Gram(Map(), Points(8, 9), {10, 11, 12, 13, 14, 15, 16, 17});
  const KernelRidgeModel m = KrrFit(k, Labels(8, 1), 0.1);
  const KernelRidgeModel after = DeleteSamplesSmw(m, {12});
  EXPECT_EQ(after.samples,
            (std::vector<std::size_t>{10, 11, 13, 14, 15, 16, 17}));
  EXPECT_THROW(DeleteSamplesSmw(m, {3}), Error);
  EXPECT_THROW(DeleteSamplesSmw(after, {12}), Error);
  EXPECT_THROW(DeleteSamplesSmw(m, {10, 11, 12, 13, 14, 15, 16, 17}), Error);
}

TEST(BoundTest, DominatesPredictionShift) {
  const auto pts = Points(20, 7);
  const FeatureMap fm = Map();
  const KernelRidgeModel m = KrrFit(Gram(fm, pts), Labels(20, 8), 0.1);
  const std::vector<std::size_t> del{0, 5, 6};
  const KernelRidgeModel after = DeleteSamplesSmw(m, del);
  for (std::uint64_t q = 0; q < 30; ++q) {
    const auto x = fixture::RandomVector(2, DeriveSeed(q, "query"), 1.5);
    const Eigen::VectorXd kx = KernelVector(fm, pts, x);
    Eigen::VectorXd ks(after.size()), alpha_s(after.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
      const std::size_t pos = m.PositionOf(after.samples[i]);
      ks(i) = kx(pos);
      alpha_s(i) = m.alpha(pos);
    }
    const double actual = std::abs(ks.dot(after.alpha) - ks.dot(alpha_s));
    EXPECT_LE(actual, DeviationBound(m, del, kx) + 1e-12);
  }
}

TEST(DriftTest, AlignmentAndMmdMatchFormulas) {
  const GramMatrix a = Gram(Map(2, 1, 1), Points(12, 3));
  const GramMatrix b = Gram(Map(2, 2, 2), Points(12, 3));
  const double expect = (a.matrix.array() * b.matrix.array()).sum() /
                        (a.matrix.norm() * b.matrix.norm());
  EXPECT_NEAR(Alignment(a.matrix, b.matrix), expect, 1e-12);
  EXPECT_NEAR(Alignment(a.matrix, a.matrix), 1.0, 1e-12);

  const std::vector<std::size_t> s{0, 1, 2, 3}, t{4, 5, 6, 7, 8};
  double aa = 0, bb = 0, ab = 0;
  for (auto i : s) for (auto j : s) aa += a.matrix(i, j);
  for (auto i : t) for (auto j : t) bb += a.matrix(i, j);
  for (auto i : s) for (auto j : t) ab += a.matrix(i, j);
  const double mmd2 = aa / 16 + bb / 25 - 2 * ab / 20;
  EXPECT_NEAR(Mmd(a.matrix, s, t), std::sqrt(std::max(0.0, mmd2)), 1e-12);
  EXPECT_NEAR(Mmd(a.matrix, s, s), 0.0, 1e-6);
}

TEST(GramCsvTest, LabelsRowsAndColumnsBySampleId) {
  const GramMatrix k = Gram(Map(), Points(2, 1), {4, 9});
  const std::string csv = GramToCsv(k);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample,s4,s9");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\ns4,1,"), std::string::npos);
}

}  // namespace
}  // namespace qmu::qkernel
