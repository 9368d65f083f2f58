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

#ifndef QMU_QCORE_HPP_
#define QMU_QCORE_HPP_

// Dense complex linear algebra for small quantum registers: pure states,
// density matrices, Kraus channels, observables and the operational
// distances used by every audit.
//
// Qubit 0 is the most significant bit of a basis index, i.e. the leftmost
// tensor factor: |q0 q1 ... q_{n-1}>.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qmu::qcore {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 10;
inline constexpr double kStateTolerance = 1e-9;

class PureState {
 public:
  // Throws on wrong length or non-unit norm (tolerance 1e-9).
  PureState(int n_qubits, CVector amplitudes);

  static PureState Basis(int n_qubits, std::size_t index);
  static PureState Zero(int n_qubits) { return Basis(n_qubits, 0); }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const { return amps_; }

 private:
  int n_qubits_;
  CVector amps_;
};

class DensityMatrix {
 public:
  // Throws unless Hermitian, unit trace and PSD, each within 1e-9.
  DensityMatrix(int n_qubits, CMatrix matrix);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }

  // Re-checks the invariants; throws qmu::Error(kInvariant) on violation.
  void Validate() const;

 private:
  struct Trusted {};
  DensityMatrix(Trusted, int n_qubits, CMatrix matrix)
      : n_qubits_(n_qubits), m_(std::move(matrix)) {}

  int n_qubits_;
  CMatrix m_;

  friend DensityMatrix MakeTrustedDensity(int n_qubits, CMatrix matrix);
};

// Wraps the output of an operation known to preserve the invariants
// (unitary conjugation, Kraus maps, convex mixtures). Hermiticity is
// re-symmetrized; only the trace is re-checked.
DensityMatrix MakeTrustedDensity(int n_qubits, CMatrix matrix);

class KrausChannel {
 public:
  // Throws unless sum K^dagger K = I within 1e-9.
  KrausChannel(int n_qubits, std::vector<CMatrix> kraus_ops);

  int n_qubits() const { return n_qubits_; }
  const std::vector<CMatrix>& ops() const { return ops_; }

 private:
  int n_qubits_;
  std::vector<CMatrix> ops_;
};

// One weighted Pauli string; paulis[q] in {I,X,Y,Z} acts on qubit q.
struct PauliTerm {
  double coefficient = 1.0;
  std::string paulis;
};

class Observable {
 public:
  static Observable Dense(CMatrix matrix);
  static Observable PauliSum(int n_qubits, std::vector<PauliTerm> terms);
  // Single-qubit Z on `qubit` of an n-qubit register.
  static Observable Z(int n_qubits, int qubit);

  int n_qubits() const { return n_qubits_; }
  bool is_dense() const { return dense_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  CMatrix ToMatrix() const;
  // Largest |eigenvalue|; bounds every expectation value.
  double SpectralRadius() const;

 private:
  Observable() = default;
  int n_qubits_ = 0;
  bool dense_ = false;
  CMatrix matrix_;
  std::vector<PauliTerm> terms_;
};

enum class ChannelKind { kDepolarizing, kDephasing, kAmplitudeDamping };

enum class PauliAxis { kX, kY, kZ };

// --- in-place kernels used by the circuit simulator -----------------------

// amps <- (M on targets) amps. M is 2^k x 2^k with k = targets.size();
// targets[0] is the most significant qubit of M's index.
void ApplyMatrixInPlace(CVector& amps, int n_qubits, const CMatrix& m,
                        std::span<const int> targets);
// rho <- M rho M^dagger on the embedded subspace.
void ConjugateInPlace(CMatrix& rho, int n_qubits, const CMatrix& m,
                      std::span<const int> targets);
void ApplyRotationInPlace(CVector& amps, int n_qubits, PauliAxis axis,
                          double angle, int target);
void ApplyPauliInPlace(CVector& amps, int n_qubits, PauliAxis axis,
                       int target);
void ApplyCnotInPlace(CVector& amps, int n_qubits, int control, int target);
void ApplyCzInPlace(CVector& amps, int n_qubits, int a, int b);

CMatrix RotationMatrix(PauliAxis axis, double angle);
CMatrix PauliMatrix(PauliAxis axis);
CMatrix CnotMatrix();
CMatrix CzMatrix();

// --- operations ------------------------------------------------------------

DensityMatrix ToDensity(const PureState& psi);

PureState ApplyUnitary(const PureState& psi, const CMatrix& u,
                       std::span<const int> targets);
DensityMatrix ApplyUnitary(const DensityMatrix& rho, const CMatrix& u,
                           std::span<const int> targets);

DensityMatrix ApplyChannel(const DensityMatrix& rho, const KrausChannel& ch,
                           std::span<const int> targets);

KrausChannel MakeChannel(ChannelKind kind, double param);

// Kraus set of `second` after `first`: {B_j A_i}.
KrausChannel Compose(const KrausChannel& first, const KrausChannel& second);

// Reduced state on `keep`, ordered as listed.
DensityMatrix PartialTrace(const DensityMatrix& rho, std::span<const int> keep);

PureState Tensor(const PureState& a, const PureState& b);
DensityMatrix Tensor(const DensityMatrix& a, const DensityMatrix& b);
DensityMatrix MaximallyMixed(int n_qubits);

double TraceDistance(const DensityMatrix& rho, const DensityMatrix& sigma);
// Squared Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double Fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

double Expectation(const PureState& psi, const Observable& o);
double Expectation(const DensityMatrix& rho, const Observable& o);

PureState RandomPureState(int n_qubits, std::uint64_t seed);
// Haar pure state or a random mixture of two, chosen by the seed.
DensityMatrix RandomState(int n_qubits, std::uint64_t seed);
// Random CPTP map from a Haar-like isometry dilation with 1..4 Kraus ops.
KrausChannel RandomChannel(int n_qubits, std::uint64_t seed);
// Haar-distributed unitary (QR of a complex Ginibre matrix).
CMatrix RandomUnitary(std::size_t dim, std::uint64_t seed);

}  // namespace qmu::qcore

#endif  // QMU_QCORE_HPP_
