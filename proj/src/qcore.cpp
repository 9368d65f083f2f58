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

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "qmu/common.hpp"

namespace qmu::qcore {
namespace {

constexpr Complex kI{0.0, 1.0};

std::size_t DimFor(int n_qubits) { return std::size_t{1} << n_qubits; }

void CheckQubitCount(int n_qubits) {
  Require(n_qubits >= 1 && n_qubits <= kMaxQubits,
          "qubit count must be in [1, " + std::to_string(kMaxQubits) +
              "], got " + std::to_string(n_qubits));
}

std::size_t BitOf(int n_qubits, int qubit) {
  return std::size_t{1} << (n_qubits - 1 - qubit);
}

void CheckTargets(int n_qubits, std::span<const int> targets) {
  Require(!targets.empty(), "empty target list");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Require(targets[i] >= 0 && targets[i] < n_qubits,
            "target qubit " + std::to_string(targets[i]) + " out of range");
    for (std::size_t j = 0; j < i; ++j) {
      Require(targets[i] != targets[j], "duplicate target qubit");
    }
  }
}

void CheckUnitary(const CMatrix& u) {
  Require(u.rows() == u.cols(), "unitary must be square");
  const CMatrix residual =
      u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  Require(residual.cwiseAbs().maxCoeff() <= kStateTolerance,
          "matrix is not unitary within 1e-9");
}

// Applies m to the 2^k amplitudes addressed by `targets` for every setting
// of the remaining bits. `data` is a contiguous vector of 2^n entries.
void ApplyToVector(Complex* data, int n_qubits, const CMatrix& m,
                   std::span<const int> targets) {
  const std::size_t k = targets.size();
  const std::size_t sub = std::size_t{1} << k;
  std::vector<std::size_t> offsets(sub, 0);
  std::size_t mask = 0;
  for (std::size_t s = 0; s < sub; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      if (s & (std::size_t{1} << (k - 1 - t))) {
        offsets[s] |= BitOf(n_qubits, targets[t]);
      }
    }
  }
  for (std::size_t t = 0; t < k; ++t) mask |= BitOf(n_qubits, targets[t]);

  std::vector<Complex> in(sub), out(sub);
  const std::size_t dim = DimFor(n_qubits);
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    for (std::size_t s = 0; s < sub; ++s) in[s] = data[base | offsets[s]];
    for (std::size_t r = 0; r < sub; ++r) {
      Complex acc{0.0, 0.0};
      for (std::size_t c = 0; c < sub; ++c) {
        acc += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
               in[c];
      }
      out[r] = acc;
    }
    for (std::size_t s = 0; s < sub; ++s) data[base | offsets[s]] = out[s];
  }
}

void ApplyToColumns(CMatrix& mat, int n_qubits, const CMatrix& m,
                    std::span<const int> targets) {
  for (Eigen::Index c = 0; c < mat.cols(); ++c) {
    ApplyToVector(mat.col(c).data(), n_qubits, m, targets);
  }
}

Eigen::VectorXd HermitianEigenvalues(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) ThrowInvariant("eigensolver failed");
  return es.eigenvalues();
}

// sqrt of a PSD Hermitian matrix; eigenvalues in [-1e-9, 0) are floored.
// A with h = A A^dagger, one column per eigenvalue above `floor`. Eigenvalues
// at round-off level are dropped: their square roots would otherwise add
// spurious 1e-8 terms to nuclear norms.
CMatrix PsdFactor(const CMatrix& h, double floor) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) ThrowInvariant("eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > floor) keep.push_back(i);
  }
  CMatrix a(h.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    a.col(static_cast<Eigen::Index>(k)) =
        es.eigenvectors().col(keep[k]) * std::sqrt(ev[keep[k]]);
  }
  return a;
}

CVector GaussianVector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[i] = Complex(re, im);
  }
  return v;
}

void CheckSameDim(const DensityMatrix& a, const DensityMatrix& b) {
  Require(a.dim() == b.dim(), "density matrix dimension mismatch");
}

}  // namespace

// --- PureState --------------------------------------------------------------

PureState::PureState(int n_qubits, CVector amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  CheckQubitCount(n_qubits);
  Require(static_cast<std::size_t>(amps_.size()) == DimFor(n_qubits),
          "amplitude vector length must be 2^n_qubits");
  Require(std::abs(amps_.norm() - 1.0) <= kStateTolerance,
          "state is not normalized within 1e-9");
}

PureState PureState::Basis(int n_qubits, std::size_t index) {
  CheckQubitCount(n_qubits);
  Require(index < DimFor(n_qubits), "basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(DimFor(n_qubits)));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return PureState(n_qubits, std::move(v));
}

// --- DensityMatrix ----------------------------------------------------------

DensityMatrix::DensityMatrix(int n_qubits, CMatrix matrix)
    : n_qubits_(n_qubits), m_(std::move(matrix)) {
  CheckQubitCount(n_qubits);
  Require(m_.rows() == m_.cols() &&
              static_cast<std::size_t>(m_.rows()) == DimFor(n_qubits),
          "density matrix must be 2^n x 2^n");
  try {
    Validate();
  } catch (const Error& e) {
    ThrowValidation(e.what());
  }
}

void DensityMatrix::Validate() const {
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance) {
    ThrowInvariant("density matrix is not Hermitian within 1e-9");
  }
  if (std::abs(m_.trace() - Complex(1.0, 0.0)) > kStateTolerance) {
    ThrowInvariant("density matrix trace differs from 1 by more than 1e-9");
  }
  if (HermitianEigenvalues(m_).minCoeff() < -kStateTolerance) {
    ThrowInvariant("density matrix has an eigenvalue below -1e-9");
  }
}

DensityMatrix MakeTrustedDensity(int n_qubits, CMatrix matrix) {
  CMatrix sym = 0.5 * (matrix + matrix.adjoint());
  if (std::abs(sym.trace() - Complex(1.0, 0.0)) > kStateTolerance) {
    ThrowInvariant("operation did not preserve the trace");
  }
  return DensityMatrix(DensityMatrix::Trusted{}, n_qubits, std::move(sym));
}

// --- KrausChannel -----------------------------------------------------------

KrausChannel::KrausChannel(int n_qubits, std::vector<CMatrix> kraus_ops)
    : n_qubits_(n_qubits), ops_(std::move(kraus_ops)) {
  CheckQubitCount(n_qubits);
  Require(!ops_.empty(), "channel needs at least one Kraus operator");
  const auto d = static_cast<Eigen::Index>(DimFor(n_qubits));
  CMatrix sum = CMatrix::Zero(d, d);
  for (const CMatrix& k : ops_) {
    Require(k.rows() == d && k.cols() == d, "Kraus operator shape mismatch");
    sum += k.adjoint() * k;
  }
  Require((sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() <=
              kStateTolerance,
          "Kraus operators are not trace preserving within 1e-9");
}

// --- Observable -------------------------------------------------------------

Observable Observable::Dense(CMatrix matrix) {
  Require(matrix.rows() == matrix.cols() && matrix.rows() >= 2,
          "observable must be square");
  int n = 0;
  while ((Eigen::Index{1} << n) < matrix.rows()) ++n;
  Require((Eigen::Index{1} << n) == matrix.rows(),
          "observable dimension must be a power of two");
  CheckQubitCount(n);
  Require((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= kStateTolerance,
          "observable is not Hermitian within 1e-9");
  Observable o;
  o.n_qubits_ = n;
  o.dense_ = true;
  o.matrix_ = std::move(matrix);
  return o;
}

Observable Observable::PauliSum(int n_qubits, std::vector<PauliTerm> terms) {
  CheckQubitCount(n_qubits);
  Require(!terms.empty(), "Pauli sum needs at least one term");
  for (const PauliTerm& t : terms) {
    Require(t.paulis.size() == static_cast<std::size_t>(n_qubits),
            "Pauli string length must equal qubit count");
    Require(std::isfinite(t.coefficient), "Pauli coefficient must be finite");
    for (char c : t.paulis) {
      Require(c == 'I' || c == 'X' || c == 'Y' || c == 'Z',
              std::string("invalid Pauli character '") + c + "'");
    }
  }
  Observable o;
  o.n_qubits_ = n_qubits;
  o.dense_ = false;
  o.terms_ = std::move(terms);
  return o;
}

Observable Observable::Z(int n_qubits, int qubit) {
  Require(qubit >= 0 && qubit < n_qubits, "readout qubit out of range");
  std::string p(static_cast<std::size_t>(n_qubits), 'I');
  p[static_cast<std::size_t>(qubit)] = 'Z';
  return PauliSum(n_qubits, {PauliTerm{1.0, p}});
}

CMatrix Observable::ToMatrix() const {
  if (dense_) return matrix_;
  const auto d = static_cast<Eigen::Index>(DimFor(n_qubits_));
  CMatrix out = CMatrix::Zero(d, d);
  for (const PauliTerm& t : terms_) {
    CMatrix term = CMatrix::Identity(1, 1);
    for (char c : t.paulis) {
      CMatrix p = CMatrix::Identity(2, 2);
      if (c == 'X') p = PauliMatrix(PauliAxis::kX);
      if (c == 'Y') p = PauliMatrix(PauliAxis::kY);
      if (c == 'Z') p = PauliMatrix(PauliAxis::kZ);
      CMatrix next(term.rows() * 2, term.cols() * 2);
      for (Eigen::Index r = 0; r < term.rows(); ++r) {
        for (Eigen::Index c2 = 0; c2 < term.cols(); ++c2) {
          next.block(2 * r, 2 * c2, 2, 2) = term(r, c2) * p;
        }
      }
      term = std::move(next);
    }
    out += t.coefficient * term;
  }
  return out;
}

double Observable::SpectralRadius() const {
  return HermitianEigenvalues(ToMatrix()).cwiseAbs().maxCoeff();
}

// --- kernels ----------------------------------------------------------------

CMatrix RotationMatrix(PauliAxis axis, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  CMatrix m(2, 2);
  switch (axis) {
    case PauliAxis::kX:
      m << c, -kI * s, -kI * s, c;
      break;
    case PauliAxis::kY:
      m << c, -s, s, c;
      break;
    case PauliAxis::kZ:
      m << std::exp(-kI * (angle / 2.0)), 0.0, 0.0,
          std::exp(kI * (angle / 2.0));
      break;
  }
  return m;
}

CMatrix PauliMatrix(PauliAxis axis) {
  CMatrix m(2, 2);
  switch (axis) {
    case PauliAxis::kX:
      m << 0.0, 1.0, 1.0, 0.0;
      break;
    case PauliAxis::kY:
      m << 0.0, -kI, kI, 0.0;
      break;
    case PauliAxis::kZ:
      m << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return m;
}

CMatrix CnotMatrix() {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

CMatrix CzMatrix() {
  CMatrix m = CMatrix::Identity(4, 4);
  m(3, 3) = -1.0;
  return m;
}

void ApplyMatrixInPlace(CVector& amps, int n_qubits, const CMatrix& m,
                        std::span<const int> targets) {
  ApplyToVector(amps.data(), n_qubits, m, targets);
}

void ConjugateInPlace(CMatrix& rho, int n_qubits, const CMatrix& m,
                      std::span<const int> targets) {
  ApplyToColumns(rho, n_qubits, m, targets);  // M rho
  CMatrix adj = rho.adjoint();                // rho M^dagger = (M (M rho)^dagger)^dagger
  ApplyToColumns(adj, n_qubits, m, targets);
  rho = adj.adjoint();
}

void ApplyRotationInPlace(CVector& amps, int n_qubits, PauliAxis axis,
                          double angle, int target) {
  const std::size_t bit = BitOf(n_qubits, target);
  const std::size_t dim = DimFor(n_qubits);
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  const Complex e0 = std::exp(-kI * (angle / 2.0));
  const Complex e1 = std::conj(e0);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & bit) continue;
    const auto i0 = static_cast<Eigen::Index>(i);
    const auto i1 = static_cast<Eigen::Index>(i | bit);
    const Complex a = amps[i0];
    const Complex b = amps[i1];
    switch (axis) {
      case PauliAxis::kX:
        amps[i0] = c * a - kI * s * b;
        amps[i1] = -kI * s * a + c * b;
        break;
      case PauliAxis::kY:
        amps[i0] = c * a - s * b;
        amps[i1] = s * a + c * b;
        break;
      case PauliAxis::kZ:
        amps[i0] = e0 * a;
        amps[i1] = e1 * b;
        break;
    }
  }
}

void ApplyPauliInPlace(CVector& amps, int n_qubits, PauliAxis axis,
                       int target) {
  const std::size_t bit = BitOf(n_qubits, target);
  const std::size_t dim = DimFor(n_qubits);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & bit) continue;
    const auto i0 = static_cast<Eigen::Index>(i);
    const auto i1 = static_cast<Eigen::Index>(i | bit);
    const Complex a = amps[i0];
    const Complex b = amps[i1];
    switch (axis) {
      case PauliAxis::kX:
        amps[i0] = b;
        amps[i1] = a;
        break;
      case PauliAxis::kY:
        amps[i0] = -kI * b;
        amps[i1] = kI * a;
        break;
      case PauliAxis::kZ:
        amps[i1] = -b;
        break;
    }
  }
}

void ApplyCnotInPlace(CVector& amps, int n_qubits, int control, int target) {
  const std::size_t cbit = BitOf(n_qubits, control);
  const std::size_t tbit = BitOf(n_qubits, target);
  const std::size_t dim = DimFor(n_qubits);
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cbit) && !(i & tbit)) {
      std::swap(amps[static_cast<Eigen::Index>(i)],
                amps[static_cast<Eigen::Index>(i | tbit)]);
    }
  }
}

void ApplyCzInPlace(CVector& amps, int n_qubits, int a, int b) {
  const std::size_t mask = BitOf(n_qubits, a) | BitOf(n_qubits, b);
  const std::size_t dim = DimFor(n_qubits);
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & mask) == mask) {
      amps[static_cast<Eigen::Index>(i)] = -amps[static_cast<Eigen::Index>(i)];
    }
  }
}

// --- operations -------------------------------------------------------------

DensityMatrix ToDensity(const PureState& psi) {
  const CVector& v = psi.amplitudes();
  return MakeTrustedDensity(psi.n_qubits(), v * v.adjoint());
}

PureState ApplyUnitary(const PureState& psi, const CMatrix& u,
                       std::span<const int> targets) {
  CheckTargets(psi.n_qubits(), targets);
  Require(u.rows() == (Eigen::Index{1} << targets.size()),
          "unitary size does not match target count");
  CheckUnitary(u);
  CVector v = psi.amplitudes();
  ApplyMatrixInPlace(v, psi.n_qubits(), u, targets);
  v.normalize();
  return PureState(psi.n_qubits(), std::move(v));
}

DensityMatrix ApplyUnitary(const DensityMatrix& rho, const CMatrix& u,
                           std::span<const int> targets) {
  CheckTargets(rho.n_qubits(), targets);
  Require(u.rows() == (Eigen::Index{1} << targets.size()),
          "unitary size does not match target count");
  CheckUnitary(u);
  CMatrix m = rho.matrix();
  ConjugateInPlace(m, rho.n_qubits(), u, targets);
  return MakeTrustedDensity(rho.n_qubits(), std::move(m));
}

DensityMatrix ApplyChannel(const DensityMatrix& rho, const KrausChannel& ch,
                           std::span<const int> targets) {
  Require(static_cast<int>(targets.size()) == ch.n_qubits(),
          "channel arity does not match target count");
  CheckTargets(rho.n_qubits(), targets);
  CMatrix out = CMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const CMatrix& k : ch.ops()) {
    CMatrix term = rho.matrix();
    ConjugateInPlace(term, rho.n_qubits(), k, targets);
    out += term;
  }
  return MakeTrustedDensity(rho.n_qubits(), std::move(out));
}

KrausChannel MakeChannel(ChannelKind kind, double param) {
  Require(param >= 0.0 && param <= 1.0,
          "channel parameter must lie in [0, 1]");
  std::vector<CMatrix> ops;
  const CMatrix id = CMatrix::Identity(2, 2);
  auto push = [&ops](double weight, const CMatrix& m) {
    if (weight > 0.0) ops.push_back(std::sqrt(weight) * m);
  };
  switch (kind) {
    case ChannelKind::kDepolarizing:
      // (1-p) rho + p I/2
      push(1.0 - 0.75 * param, id);
      push(0.25 * param, PauliMatrix(PauliAxis::kX));
      push(0.25 * param, PauliMatrix(PauliAxis::kY));
      push(0.25 * param, PauliMatrix(PauliAxis::kZ));
      break;
    case ChannelKind::kDephasing:
      // off-diagonals scaled by (1-p)
      push(1.0 - 0.5 * param, id);
      push(0.5 * param, PauliMatrix(PauliAxis::kZ));
      break;
    case ChannelKind::kAmplitudeDamping: {
      CMatrix k0 = CMatrix::Zero(2, 2);
      k0(0, 0) = 1.0;
      k0(1, 1) = std::sqrt(1.0 - param);
      ops.push_back(k0);
      if (param > 0.0) {
        CMatrix k1 = CMatrix::Zero(2, 2);
        k1(0, 1) = std::sqrt(param);
        ops.push_back(k1);
      }
      break;
    }
  }
  return KrausChannel(1, std::move(ops));
}

KrausChannel Compose(const KrausChannel& first, const KrausChannel& second) {
  Require(first.n_qubits() == second.n_qubits(),
          "cannot compose channels of different arity");
  std::vector<CMatrix> ops;
  ops.reserve(first.ops().size() * second.ops().size());
  for (const CMatrix& b : second.ops()) {
    for (const CMatrix& a : first.ops()) ops.push_back(b * a);
  }
  return KrausChannel(first.n_qubits(), std::move(ops));
}

DensityMatrix PartialTrace(const DensityMatrix& rho,
                           std::span<const int> keep) {
  Require(!keep.empty(), "partial trace needs a non-empty keep set");
  const int n = rho.n_qubits();
  CheckTargets(n, keep);
  std::vector<int> traced;
  for (int q = 0; q < n; ++q) {
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) {
      traced.push_back(q);
    }
  }
  const std::size_t kdim = std::size_t{1} << keep.size();
  const std::size_t tdim = std::size_t{1} << traced.size();
  std::vector<std::size_t> kbits(kdim, 0), tbits(tdim, 0);
  for (std::size_t a = 0; a < kdim; ++a) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (a & (std::size_t{1} << (keep.size() - 1 - i))) {
        kbits[a] |= BitOf(n, keep[i]);
      }
    }
  }
  for (std::size_t t = 0; t < tdim; ++t) {
    for (std::size_t i = 0; i < traced.size(); ++i) {
      if (t & (std::size_t{1} << (traced.size() - 1 - i))) {
        tbits[t] |= BitOf(n, traced[i]);
      }
    }
  }
  const CMatrix& m = rho.matrix();
  const auto kd = static_cast<Eigen::Index>(kdim);
  CMatrix out = CMatrix::Zero(kd, kd);
  for (std::size_t a = 0; a < kdim; ++a) {
    for (std::size_t b = 0; b < kdim; ++b) {
      Complex acc{0.0, 0.0};
      for (std::size_t t = 0; t < tdim; ++t) {
        acc += m(static_cast<Eigen::Index>(kbits[a] | tbits[t]),
                 static_cast<Eigen::Index>(kbits[b] | tbits[t]));
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return MakeTrustedDensity(static_cast<int>(keep.size()), std::move(out));
}

PureState Tensor(const PureState& a, const PureState& b) {
  const int n = a.n_qubits() + b.n_qubits();
  CheckQubitCount(n);
  CVector v(static_cast<Eigen::Index>(a.dim() * b.dim()));
  const auto bd = static_cast<Eigen::Index>(b.dim());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) {
    v.segment(i * bd, bd) = a.amplitudes()[i] * b.amplitudes();
  }
  return PureState(n, std::move(v));
}

DensityMatrix Tensor(const DensityMatrix& a, const DensityMatrix& b) {
  const int n = a.n_qubits() + b.n_qubits();
  CheckQubitCount(n);
  const auto bd = static_cast<Eigen::Index>(b.dim());
  const auto ad = static_cast<Eigen::Index>(a.dim());
  CMatrix m(ad * bd, ad * bd);
  for (Eigen::Index r = 0; r < ad; ++r) {
    for (Eigen::Index c = 0; c < ad; ++c) {
      m.block(r * bd, c * bd, bd, bd) = a.matrix()(r, c) * b.matrix();
    }
  }
  return MakeTrustedDensity(n, std::move(m));
}

DensityMatrix MaximallyMixed(int n_qubits) {
  CheckQubitCount(n_qubits);
  const auto d = static_cast<Eigen::Index>(DimFor(n_qubits));
  return MakeTrustedDensity(n_qubits,
                            CMatrix::Identity(d, d) / static_cast<double>(d));
}

double TraceDistance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  CheckSameDim(rho, sigma);
  const CMatrix diff = rho.matrix() - sigma.matrix();
  const double d =
      0.5 * HermitianEigenvalues(0.5 * (diff + diff.adjoint())).cwiseAbs().sum();
  return std::clamp(d, 0.0, 1.0);
}

double Fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  CheckSameDim(rho, sigma);
  // sqrt(F) = ||sqrt(rho) sqrt(sigma)||_1 = ||A^dagger B||_1 for any
  // factorizations rho = A A^dagger, sigma = B B^dagger.
  constexpr double kFloor = 1e-14;
  const CMatrix a = PsdFactor(rho.matrix(), kFloor);
  const CMatrix b = PsdFactor(sigma.matrix(), kFloor);
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  const CMatrix m = a.adjoint() * b;
  const double nuclear = Eigen::JacobiSVD<CMatrix>(m).singularValues().sum();
  return std::clamp(nuclear * nuclear, 0.0, 1.0);
}

namespace {

// Pauli string P: P|k> = phase(k) |k ^ flip>.
struct PauliAction {
  std::size_t flip = 0;
  std::size_t y_mask = 0;
  std::size_t z_mask = 0;
  int y_count = 0;

  Complex Phase(std::size_t k) const {
    // Y = i X Z, so each Y contributes i and a Z-like sign.
    const int sign_bits = std::popcount(k & (z_mask | y_mask));
    Complex phase = (sign_bits % 2) ? Complex(-1.0, 0.0) : Complex(1.0, 0.0);
    static const Complex kPowI[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return phase * kPowI[y_count % 4];
  }
};

PauliAction ParsePauli(const std::string& paulis, int n_qubits) {
  PauliAction act;
  for (int q = 0; q < n_qubits; ++q) {
    const std::size_t bit = BitOf(n_qubits, q);
    switch (paulis[static_cast<std::size_t>(q)]) {
      case 'X':
        act.flip |= bit;
        break;
      case 'Y':
        act.flip |= bit;
        act.y_mask |= bit;
        ++act.y_count;
        break;
      case 'Z':
        act.z_mask |= bit;
        break;
      default:
        break;
    }
  }
  return act;
}

double CheckedReal(Complex value) {
  if (std::abs(value.imag()) > kStateTolerance) {
    ThrowInvariant("expectation value has a non-negligible imaginary part");
  }
  return value.real();
}

}  // namespace

double Expectation(const PureState& psi, const Observable& o) {
  Require(o.n_qubits() == psi.n_qubits(), "observable dimension mismatch");
  const CVector& v = psi.amplitudes();
  if (o.is_dense()) {
    return CheckedReal(v.dot(o.ToMatrix() * v));
  }
  Complex total{0.0, 0.0};
  for (const PauliTerm& t : o.terms()) {
    const PauliAction act = ParsePauli(t.paulis, psi.n_qubits());
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k < psi.dim(); ++k) {
      acc += std::conj(v[static_cast<Eigen::Index>(k ^ act.flip)]) *
             act.Phase(k) * v[static_cast<Eigen::Index>(k)];
    }
    total += t.coefficient * acc;
  }
  return CheckedReal(total);
}

double Expectation(const DensityMatrix& rho, const Observable& o) {
  Require(o.n_qubits() == rho.n_qubits(), "observable dimension mismatch");
  const CMatrix& m = rho.matrix();
  if (o.is_dense()) {
    return CheckedReal((m * o.ToMatrix()).trace());
  }
  Complex total{0.0, 0.0};
  for (const PauliTerm& t : o.terms()) {
    const PauliAction act = ParsePauli(t.paulis, rho.n_qubits());
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k < rho.dim(); ++k) {
      acc += act.Phase(k) * m(static_cast<Eigen::Index>(k),
                              static_cast<Eigen::Index>(k ^ act.flip));
    }
    total += t.coefficient * acc;
  }
  return CheckedReal(total);
}

PureState RandomPureState(int n_qubits, std::uint64_t seed) {
  CheckQubitCount(n_qubits);
  Rng rng(seed);
  CVector v = GaussianVector(DimFor(n_qubits), rng);
  v.normalize();
  return PureState(n_qubits, std::move(v));
}

DensityMatrix RandomState(int n_qubits, std::uint64_t seed) {
  CheckQubitCount(n_qubits);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool mixture = unit(rng) < 0.5;
  CVector a = GaussianVector(DimFor(n_qubits), rng);
  a.normalize();
  CMatrix m = a * a.adjoint();
  if (mixture) {
    const double w = unit(rng);
    CVector b = GaussianVector(DimFor(n_qubits), rng);
    b.normalize();
    m = w * m + (1.0 - w) * (b * b.adjoint());
  }
  return MakeTrustedDensity(n_qubits, std::move(m));
}

CMatrix RandomUnitary(std::size_t dim, std::uint64_t seed) {
  Require(dim >= 1, "unitary dimension must be positive");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  CMatrix g(d, d);
  for (Eigen::Index c = 0; c < d; ++c) g.col(c) = GaussianVector(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const Complex diag = r(i, i);
    const double mag = std::abs(diag);
    if (mag > 0.0) q.col(i) *= diag / mag;
  }
  return q;
}

KrausChannel RandomChannel(int n_qubits, std::uint64_t seed) {
  CheckQubitCount(n_qubits);
  Rng rng(seed);
  const std::size_t dim = DimFor(n_qubits);
  const std::size_t rank = 1 + static_cast<std::size_t>(rng() % 4);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto rows = static_cast<Eigen::Index>(dim * rank);
  CMatrix g(rows, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    g.col(c) = GaussianVector(dim * rank, rng);
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  const CMatrix isometry = qr.householderQ() * CMatrix::Identity(rows, d);
  std::vector<CMatrix> ops;
  ops.reserve(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    ops.push_back(isometry.block(static_cast<Eigen::Index>(i) * d, 0, d, d));
  }
  return KrausChannel(n_qubits, std::move(ops));
}

}  // namespace qmu::qcore
