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

#ifndef QMU_PQC_HPP_
#define QMU_PQC_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qmu/qcore.hpp"

namespace qmu::pqc {

enum class GateKind { kRX, kRY, kRZ, kCNOT, kCZ };

struct FixedAngle {
  double radians = 0.0;
};
struct Trainable {
  std::size_t param = 0;
};
struct DataBound {
  std::size_t feature = 0;
  double scale = 1.0;
};
using Binding = std::variant<std::monostate, FixedAngle, Trainable, DataBound>;

struct GateSpec {
  GateKind kind = GateKind::kRY;
  std::vector<int> targets;
  Binding binding;

  bool is_rotation() const {
    return kind == GateKind::kRX || kind == GateKind::kRY ||
           kind == GateKind::kRZ;
  }
};

enum class Entangler { kLinear, kRing };

// Immutable circuit description. Noise, when present, is one depolarizing
// channel per qubit at each recorded layer boundary.
class CircuitTemplate {
 public:
  CircuitTemplate(int n_qubits, std::vector<GateSpec> gates,
                  std::size_t n_params, std::size_t n_features,
                  qcore::Observable readout,
                  std::optional<double> noise = std::nullopt,
                  std::vector<std::size_t> noise_sites = {});

  int n_qubits() const { return n_qubits_; }
  const std::vector<GateSpec>& gates() const { return gates_; }
  std::size_t n_params() const { return n_params_; }
  std::size_t n_features() const { return n_features_; }
  const qcore::Observable& readout() const { return readout_; }
  const std::optional<double>& noise() const { return noise_; }
  // Gate counts after which the noise layer is applied.
  const std::vector<std::size_t>& noise_sites() const { return noise_sites_; }
  bool noisy() const { return noise_.has_value(); }

  CircuitTemplate WithNoise(std::optional<double> p) const;
  CircuitTemplate WithReadout(qcore::Observable readout) const;

 private:
  int n_qubits_;
  std::vector<GateSpec> gates_;
  std::size_t n_params_;
  std::size_t n_features_;
  qcore::Observable readout_;
  std::optional<double> noise_;
  std::vector<std::size_t> noise_sites_;
};

using ParamVector = std::vector<double>;

struct AnsatzOptions {
  int n_qubits = 2;
  int depth = 1;
  Entangler entangler = Entangler::kLinear;
  bool reupload = true;
  // Defaults to n_qubits; qubit q encodes feature q mod n_features.
  std::optional<std::size_t> n_features;
  double data_scale = 1.0;
  std::optional<double> noise;
};

// Layers of [RY(data) per qubit] [RY, RZ per qubit, trainable] [CNOT
// entangler]. n_params = 2 * n_qubits * depth.
CircuitTemplate BuildLayeredAnsatz(const AnsatzOptions& opts);
CircuitTemplate BuildLayeredAnsatz(int n_qubits, int depth,
                                   Entangler entangler, bool reupload);

using State = std::variant<qcore::PureState, qcore::DensityMatrix>;

State Execute(const CircuitTemplate& t, std::span<const double> theta,
              std::span<const double> x);
// Noiseless statevector; throws for noisy templates.
qcore::PureState ExecutePure(const CircuitTemplate& t,
                             std::span<const double> theta,
                             std::span<const double> x);
// Statevector with the angle of gate `gate_index` offset by `shift`.
qcore::CVector ExecuteShifted(const CircuitTemplate& t,
                              std::span<const double> theta,
                              std::span<const double> x,
                              std::size_t gate_index, double shift);

// d|psi>/d(angle of gate `gate_index`): -i/2 G inserted after that gate.
// Unnormalized.
qcore::CVector ExecuteDerivative(const CircuitTemplate& t,
                                 std::span<const double> theta,
                                 std::span<const double> x,
                                 std::size_t gate_index);

double Predict(const CircuitTemplate& t, std::span<const double> theta,
               std::span<const double> x);
// Prediction with gate `gate_index` angle offset by `shift`.
double PredictShifted(const CircuitTemplate& t, std::span<const double> theta,
                      std::span<const double> x, std::size_t gate_index,
                      double shift);

// Probe-averaged output state: (1/|P|) sum_x density(execute(t, theta, x)).
qcore::DensityMatrix ModelState(const CircuitTemplate& t,
                                std::span<const double> theta,
                                const std::vector<std::vector<double>>& probes);

// Trace distance and infidelity between the probe-averaged states of two
// parameter vectors. The single implementation behind every model audit.
struct ModelDistance {
  double trace_distance = 0.0;
  double infidelity = 0.0;
};
ModelDistance CompareModels(const CircuitTemplate& t,
                            std::span<const double> theta_a,
                            std::span<const double> theta_b,
                            const std::vector<std::vector<double>>& probes);

qcore::DensityMatrix AsDensity(const State& s);

// Angle of a rotation gate under (theta, x).
double GateAngle(const GateSpec& g, std::span<const double> theta,
                 std::span<const double> x);

nlohmann::json TemplateToJson(const CircuitTemplate& t);
CircuitTemplate TemplateFromJson(const nlohmann::json& j);

const char* GateKindName(GateKind k);

}  // namespace qmu::pqc

#endif  // QMU_PQC_HPP_
