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


#include "qmu/qcore.hpp"

#include <array>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "qmu/common.hpp"

namespace qmu::qcore {
namespace {

constexpr double kTol = 1e-10;

CMatrix Rho(const PureState& p) { return ToDensity(p).matrix(); }

TEST(PureStateTest, RejectsBadNorm) {
  CVector v = CVector::Zero(4);
  v(0) = 1.0;
  v(1) = 0.1;
  EXPECT_THROW(PureState(2, v), Error);
  EXPECT_THROW(PureState(2, CVector::Zero(3)), Error);
  EXPECT_NO_THROW(PureState(2, v.normalized()));
}

TEST(DensityMatrixTest, RejectsEachBrokenInvariant) {
  CMatrix nonherm = CMatrix::Identity(2, 2) / 2.0;
  nonherm(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix(1, nonherm), Error);

  EXPECT_THROW(DensityMatrix(1, CMatrix::Identity(2, 2)), Error);

  CMatrix negative(2, 2);
  negative << 1.2, 0, 0, -0.2;
  EXPECT_THROW(DensityMatrix(1, negative), Error);

  try {
    DensityMatrix(1, negative);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

TEST(KrausChannelTest, RejectsNonTracePreserving) {
  std::vector<CMatrix> ops{CMatrix::Identity(2, 2) * 0.9};
  EXPECT_THROW(KrausChannel(1, ops), Error);
}

TEST(GatesTest, RotationsMatchClosedForm) {
  for (double a : {0.0, 0.3, -1.7, 3.1}) {
    for (auto [axis, c] : {std::pair{PauliAxis::kX, 'X'},
                           std::pair{PauliAxis::kY, 'Y'},
                           std::pair{PauliAxis::kZ, 'Z'}}) {
      EXPECT_LT((RotationMatrix(axis, a) - oracle::Rot(c, a)).norm(), kTol);
    }
  }
}

TEST(GatesTest, UnitaryOnPermutedTargetsMatchesKronecker) {
  const int n = 3;
  const PureState psi = RandomPureState(n, 11);
  const CMatrix u = RandomUnitary(4, 12);
  const std::array<int, 2> targets{2, 0};
  const PureState out = ApplyUnitary(psi, u, targets);

  // Oracle: permute qubits so the targets sit at positions (0, 1), apply
  // u (x) I, permute back.
  auto bit = [](std::size_t i, int q) { return (i >> (n - 1 - q)) & 1; };
  const std::array<int, 3> order{2, 0, 1};
  CMatrix perm = CMatrix::Zero(8, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    std::size_t j = 0;
    for (int k = 0; k < n; ++k) j = (j << 1) | bit(i, order[k]);
    perm(j, i) = 1.0;
  }
  const CMatrix full = perm.adjoint() *
                       Eigen::kroneckerProduct(u, CMatrix::Identity(2, 2)).eval() *
                       perm;
  EXPECT_LT((out.amplitudes() - full * psi.amplitudes()).norm(), kTol);
}

TEST(GatesTest, CnotFlipsTargetOnlyWhenControlSet) {
  const std::array<int, 2> ct{0, 1};
  PureState s = ApplyUnitary(PureState::Basis(2, 2), CnotMatrix(), ct);
  EXPECT_NEAR(std::abs(s.amplitudes()(3)), 1.0, kTol);
  s = ApplyUnitary(PureState::Basis(2, 1), CnotMatrix(), ct);
  EXPECT_NEAR(std::abs(s.amplitudes()(1)), 1.0, kTol);
}

TEST(ChannelTest, NamedChannelsMatchClosedForms) {
  const std::array<int, 1> q0{0};
  const DensityMatrix one = ToDensity(PureState::Basis(1, 1));
  const DensityMatrix damped =
      ApplyChannel(one, MakeChannel(ChannelKind::kAmplitudeDamping, 0.3), q0);
  EXPECT_NEAR(damped.matrix()(0, 0).real(), 0.3, kTol);
  EXPECT_NEAR(damped.matrix()(1, 1).real(), 0.7, kTol);

  const DensityMatrix plus = ToDensity(
      PureState(1, CVector::Constant(2, 1.0 / std::sqrt(2.0))));
  const DensityMatrix dephased =
      ApplyChannel(plus, MakeChannel(ChannelKind::kDephasing, 0.4), q0);
  EXPECT_NEAR(dephased.matrix()(0, 1).real(), 0.5 * 0.6, kTol);

  const DensityMatrix depol =
      ApplyChannel(one, MakeChannel(ChannelKind::kDepolarizing, 0.2), q0);
  EXPECT_NEAR(depol.matrix()(1, 1).real(), 0.8 + 0.1, kTol);
}

TEST(ChannelTest, EmbeddedChannelMatchesKrausSum) {
  const int n = 3;
  const DensityMatrix rho = RandomState(n, 5);
  const KrausChannel ch = RandomChannel(1, 6);
  const std::array<int, 1> t{1};
  CMatrix expect = CMatrix::Zero(8, 8);
  for (const CMatrix& k : ch.ops()) {
    const CMatrix e = oracle::Embed(k, 1, n);
    expect += e * rho.matrix() * e.adjoint();
  }
  EXPECT_LT((ApplyChannel(rho, ch, t).matrix() - expect).norm(), kTol);
}

TEST(ChannelTest, ComposeEqualsSequentialApplication) {
  const DensityMatrix rho = RandomState(2, 1);
  const KrausChannel a = RandomChannel(2, 2);
  const KrausChannel b = RandomChannel(2, 3);
  const std::array<int, 2> all{0, 1};
  const DensityMatrix seq = ApplyChannel(ApplyChannel(rho, a, all), b, all);
  const DensityMatrix comp = ApplyChannel(rho, Compose(a, b), all);
  EXPECT_LT((seq.matrix() - comp.matrix()).norm(), 1e-9);
}

TEST(StructureTest, TensorIsKronecker) {
  const DensityMatrix a = RandomState(1, 7), b = RandomState(2, 8);
  const CMatrix k = Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval();
  EXPECT_LT((Tensor(a, b).matrix() - k).norm(), kTol);
}

TEST(StructureTest, PartialTraceOfProductRecoversFactors) {
  const DensityMatrix a = RandomState(1, 9), b = RandomState(2, 10);
  const DensityMatrix ab = Tensor(a, b);
  const std::array<int, 1> first{0};
  const std::array<int, 2> rest{1, 2};
  EXPECT_LT((PartialTrace(ab, first).matrix() - a.matrix()).norm(), 1e-10);
  EXPECT_LT((PartialTrace(ab, rest).matrix() - b.matrix()).norm(), 1e-10);

  // Listing the kept qubits in reverse order swaps them.
  const std::array<int, 2> swapped{2, 1};
  const DensityMatrix c = RandomState(1, 3), d = RandomState(1, 4);
  const DensityMatrix acd = Tensor(a, Tensor(c, d));
  EXPECT_LT((PartialTrace(acd, swapped).matrix() - Tensor(d, c).matrix()).norm(),
            1e-10);
}

TEST(DistanceTest, MatchesSingularValueOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int n = 1 + static_cast<int>(s % 3);
    const DensityMatrix r = RandomState(n, DeriveSeed(s, "r"));
    const DensityMatrix q = RandomState(n, DeriveSeed(s, "q"));
    EXPECT_NEAR(TraceDistance(r, q), oracle::TraceDistance(r.matrix(), q.matrix()),
                1e-9);
    EXPECT_NEAR(Fidelity(r, q), oracle::Fidelity(r.matrix(), q.matrix()), 1e-7);
  }
}

TEST(DistanceTest, PureStatesReduceToOverlap) {
  const PureState a = RandomPureState(2, 1), b = RandomPureState(2, 2);
  const double overlap = std::norm(a.amplitudes().dot(b.amplitudes()));
  EXPECT_NEAR(Fidelity(ToDensity(a), ToDensity(b)), overlap, 1e-9);
  EXPECT_NEAR(TraceDistance(ToDensity(a), ToDensity(b)),
              std::sqrt(1.0 - overlap), 1e-9);
}

TEST(DistanceTest, FuchsVanDeGraafHolds) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const DensityMatrix r = RandomState(2, DeriveSeed(s, "a"));
    const DensityMatrix q = RandomState(2, DeriveSeed(s, "b"));
    const double d = TraceDistance(r, q), f = Fidelity(r, q);
    EXPECT_LE(1.0 - std::sqrt(f), d + 1e-9);
    EXPECT_LE(d, std::sqrt(1.0 - f) + 1e-9);
  }
}

TEST(DistanceTest, ContractsUnderRandomChannels) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const int n = 1 + static_cast<int>(s % 3);
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    const DensityMatrix r = RandomState(n, DeriveSeed(s, "rho"));
    const DensityMatrix q = RandomState(n, DeriveSeed(s, "sigma"));
    const KrausChannel ch = RandomChannel(n, DeriveSeed(s, "ch"));
    const DensityMatrix er = ApplyChannel(r, ch, all);
    const DensityMatrix eq = ApplyChannel(q, ch, all);
    EXPECT_NO_THROW(er.Validate());
    EXPECT_LE(TraceDistance(er, eq), TraceDistance(r, q) + 1e-9);
    EXPECT_GE(Fidelity(er, eq), Fidelity(r, q) - 1e-9);
  }
}

TEST(ObservableTest, PauliSumMatchesKronecker) {
  const Observable o =
      Observable::PauliSum(2, {{0.5, "ZX"}, {-1.0, "YI"}});
  const CMatrix expect =
      0.5 * Eigen::kroneckerProduct(oracle::Pauli('Z'), oracle::Pauli('X')).eval() -
      Eigen::kroneckerProduct(oracle::Pauli('Y'), oracle::Pauli('I')).eval();
  EXPECT_LT((o.ToMatrix() - expect).norm(), kTol);
  // ZX and YI anticommute, so the spectrum is +-sqrt(0.25 + 1).
  EXPECT_NEAR(o.SpectralRadius(), std::sqrt(1.25), 1e-9);
}

TEST(ObservableTest, ExpectationAgreesForPureAndMixed) {
  const Observable z1 = Observable::Z(3, 1);
  const PureState psi = RandomPureState(3, 21);
  const double e = Expectation(psi, z1);
  EXPECT_NEAR(e, Expectation(ToDensity(psi), z1), 1e-10);
  EXPECT_NEAR(e, oracle::Expect(Rho(psi), oracle::Embed(oracle::Pauli('Z'), 1, 3)),
              1e-10);
  EXPECT_NEAR(Expectation(PureState::Basis(3, 2), z1), -1.0, kTol);
}

TEST(RandomTest, SeededConstructionIsReproducible) {
  EXPECT_EQ(RandomUnitary(4, 3), RandomUnitary(4, 3));
  const CMatrix u = RandomUnitary(8, 4);
  EXPECT_LT((u.adjoint() * u - CMatrix::Identity(8, 8)).norm(), 1e-10);
  EXPECT_EQ(DeriveSeed(1, "x"), DeriveSeed(1, "x"));
  EXPECT_NE(DeriveSeed(1, "x"), DeriveSeed(1, "y"));
  EXPECT_NE(DeriveSeed(1, "x", 0), DeriveSeed(1, "x", 1));
}

TEST(MaximallyMixedTest, IsIdentityOverDimension) {
  EXPECT_LT((MaximallyMixed(2).matrix() - CMatrix::Identity(4, 4) / 4.0).norm(),
            kTol);
}

}  // namespace
}  // namespace qmu::qcore
