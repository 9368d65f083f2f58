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

#include "qmu/pqc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "qmu/common.hpp"

namespace qmu::pqc {
namespace {

constexpr std::size_t kNoShift = std::numeric_limits<std::size_t>::max();

qcore::PauliAxis AxisOf(GateKind k) {
  switch (k) {
    case GateKind::kRX:
      return qcore::PauliAxis::kX;
    case GateKind::kRY:
      return qcore::PauliAxis::kY;
    default:
      return qcore::PauliAxis::kZ;
  }
}

void CheckInputs(const CircuitTemplate& t, std::span<const double> theta,
                 std::span<const double> x) {
  Require(theta.size() == t.n_params(),
          "parameter vector length " + std::to_string(theta.size()) +
              " does not match template n_params " +
              std::to_string(t.n_params()));
  Require(x.size() == t.n_features(),
          "feature vector length " + std::to_string(x.size()) +
              " does not match template n_features " +
              std::to_string(t.n_features()));
}

// Optionally multiplies by -i/2 times the generator of gate `insert_gate`
// right after that gate, which yields the exact derivative state.
qcore::CVector RunPure(const CircuitTemplate& t, std::span<const double> theta,
                       std::span<const double> x, std::size_t shift_gate,
                       double shift, std::size_t insert_gate = kNoShift) {
  const int n = t.n_qubits();
  qcore::CVector amps = qcore::CVector::Zero(Eigen::Index{1} << n);
  amps[0] = 1.0;
  const auto& gates = t.gates();
  for (std::size_t gi = 0; gi < gates.size(); ++gi) {
    const GateSpec& g = gates[gi];
    switch (g.kind) {
      case GateKind::kCNOT:
        qcore::ApplyCnotInPlace(amps, n, g.targets[0], g.targets[1]);
        break;
      case GateKind::kCZ:
        qcore::ApplyCzInPlace(amps, n, g.targets[0], g.targets[1]);
        break;
      default: {
        double angle = GateAngle(g, theta, x);
        if (gi == shift_gate) angle += shift;
        qcore::ApplyRotationInPlace(amps, n, AxisOf(g.kind), angle,
                                    g.targets[0]);
        if (gi == insert_gate) {
          qcore::ApplyPauliInPlace(amps, n, AxisOf(g.kind), g.targets[0]);
          amps *= qcore::Complex(0.0, -0.5);
        }
      }
    }
  }
  return amps;
}

qcore::CMatrix RunMixed(const CircuitTemplate& t,
                        std::span<const double> theta,
                        std::span<const double> x, std::size_t shift_gate,
                        double shift) {
  const int n = t.n_qubits();
  const Eigen::Index d = Eigen::Index{1} << n;
  qcore::CMatrix rho = qcore::CMatrix::Zero(d, d);
  rho(0, 0) = 1.0;
  const qcore::KrausChannel depol =
      qcore::MakeChannel(qcore::ChannelKind::kDepolarizing, *t.noise());
  const qcore::CMatrix cnot = qcore::CnotMatrix();
  const qcore::CMatrix cz = qcore::CzMatrix();
  const auto& gates = t.gates();
  const auto& sites = t.noise_sites();
  auto apply_noise = [&](std::size_t done) {
    if (std::find(sites.begin(), sites.end(), done) == sites.end()) return;
    for (int q = 0; q < n; ++q) {
      const std::array<int, 1> target{q};
      qcore::CMatrix acc = qcore::CMatrix::Zero(d, d);
      for (const qcore::CMatrix& k : depol.ops()) {
        qcore::CMatrix term = rho;
        qcore::ConjugateInPlace(term, n, k, target);
        acc += term;
      }
      rho = std::move(acc);
    }
  };
  apply_noise(0);
  for (std::size_t gi = 0; gi < gates.size(); ++gi) {
    const GateSpec& g = gates[gi];
    switch (g.kind) {
      case GateKind::kCNOT:
        qcore::ConjugateInPlace(rho, n, cnot, g.targets);
        break;
      case GateKind::kCZ:
        qcore::ConjugateInPlace(rho, n, cz, g.targets);
        break;
      default: {
        double angle = GateAngle(g, theta, x);
        if (gi == shift_gate) angle += shift;
        qcore::ConjugateInPlace(rho, n,
                                qcore::RotationMatrix(AxisOf(g.kind), angle),
                                g.targets);
      }
    }
    apply_noise(gi + 1);
  }
  return rho;
}

State RunState(const CircuitTemplate& t, std::span<const double> theta,
               std::span<const double> x, std::size_t shift_gate,
               double shift) {
  CheckInputs(t, theta, x);
  if (t.noisy()) {
    return qcore::MakeTrustedDensity(t.n_qubits(),
                                     RunMixed(t, theta, x, shift_gate, shift));
  }
  qcore::CVector amps = RunPure(t, theta, x, shift_gate, shift);
  amps.normalize();
  return qcore::PureState(t.n_qubits(), std::move(amps));
}

double ExpectationOf(const State& s, const qcore::Observable& o) {
  return std::visit([&o](const auto& st) { return qcore::Expectation(st, o); },
                    s);
}

}  // namespace

const char* GateKindName(GateKind k) {
  switch (k) {
    case GateKind::kRX:
      return "RX";
    case GateKind::kRY:
      return "RY";
    case GateKind::kRZ:
      return "RZ";
    case GateKind::kCNOT:
      return "CNOT";
    case GateKind::kCZ:
      return "CZ";
  }
  return "?";
}

CircuitTemplate::CircuitTemplate(int n_qubits, std::vector<GateSpec> gates,
                                 std::size_t n_params, std::size_t n_features,
                                 qcore::Observable readout,
                                 std::optional<double> noise,
                                 std::vector<std::size_t> noise_sites)
    : n_qubits_(n_qubits),
      gates_(std::move(gates)),
      n_params_(n_params),
      n_features_(n_features),
      readout_(std::move(readout)),
      noise_(noise),
      noise_sites_(std::move(noise_sites)) {
  Require(n_qubits_ >= 1 && n_qubits_ <= qcore::kMaxQubits,
          "template qubit count out of range");
  Require(readout_.n_qubits() == n_qubits_,
          "readout observable acts on the wrong number of qubits");
  std::vector<bool> seen(n_params_, false);
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    const GateSpec& g = gates_[i];
    const std::string where = "gate " + std::to_string(i) + ": ";
    const std::size_t arity = g.is_rotation() ? 1 : 2;
    Require(g.targets.size() == arity,
            where + GateKindName(g.kind) + " needs " + std::to_string(arity) +
                " target(s)");
    for (int q : g.targets) {
      Require(q >= 0 && q < n_qubits_, where + "target out of range");
    }
    if (arity == 2) {
      Require(g.targets[0] != g.targets[1], where + "targets must differ");
      Require(std::holds_alternative<std::monostate>(g.binding),
              where + "two-qubit gates take no angle binding");
    } else {
      Require(!std::holds_alternative<std::monostate>(g.binding),
              where + "rotation needs an angle binding");
    }
    if (const auto* tr = std::get_if<Trainable>(&g.binding)) {
      Require(tr->param < n_params_, where + "param index out of range");
      seen[tr->param] = true;
    }
    if (const auto* db = std::get_if<DataBound>(&g.binding)) {
      Require(db->feature < n_features_, where + "feature index out of range");
      Require(std::isfinite(db->scale), where + "data scale must be finite");
    }
    if (const auto* fa = std::get_if<FixedAngle>(&g.binding)) {
      Require(std::isfinite(fa->radians), where + "angle must be finite");
    }
  }
  for (std::size_t p = 0; p < n_params_; ++p) {
    Require(seen[p], "trainable parameter " + std::to_string(p) +
                         " is not used by any gate");
  }
  if (noise_) {
    Require(*noise_ >= 0.0 && *noise_ <= 1.0,
            "noise probability must lie in [0, 1]");
  }
  for (std::size_t s : noise_sites_) {
    Require(s <= gates_.size(), "noise site beyond the gate list");
  }
}

CircuitTemplate CircuitTemplate::WithNoise(std::optional<double> p) const {
  return CircuitTemplate(n_qubits_, gates_, n_params_, n_features_, readout_, p,
                         noise_sites_);
}

CircuitTemplate CircuitTemplate::WithReadout(qcore::Observable readout) const {
  return CircuitTemplate(n_qubits_, gates_, n_params_, n_features_,
                         std::move(readout), noise_, noise_sites_);
}

CircuitTemplate BuildLayeredAnsatz(const AnsatzOptions& opts) {
  Require(opts.n_qubits >= 1 && opts.n_qubits <= qcore::kMaxQubits,
          "n_qubits out of range");
  Require(opts.depth >= 1, "depth must be at least 1");
  const int n = opts.n_qubits;
  const std::size_t n_features =
      opts.n_features.value_or(static_cast<std::size_t>(n));
  Require(n_features >= 1, "n_features must be at least 1");

  std::vector<GateSpec> gates;
  std::vector<std::size_t> sites;
  std::size_t param = 0;
  for (int layer = 0; layer < opts.depth; ++layer) {
    if (layer == 0 || opts.reupload) {
      for (int q = 0; q < n; ++q) {
        gates.push_back(
            {GateKind::kRY,
             {q},
             DataBound{static_cast<std::size_t>(q) % n_features,
                       opts.data_scale}});
      }
    }
    for (int q = 0; q < n; ++q) {
      gates.push_back({GateKind::kRY, {q}, Trainable{param++}});
      gates.push_back({GateKind::kRZ, {q}, Trainable{param++}});
    }
    for (int q = 0; q + 1 < n; ++q) {
      gates.push_back({GateKind::kCNOT, {q, q + 1}, std::monostate{}});
    }
    if (opts.entangler == Entangler::kRing && n >= 3) {
      gates.push_back({GateKind::kCNOT, {n - 1, 0}, std::monostate{}});
    }
    sites.push_back(gates.size());
  }
  return CircuitTemplate(n, std::move(gates), param, n_features,
                         qcore::Observable::Z(n, 0), opts.noise,
                         std::move(sites));
}

CircuitTemplate BuildLayeredAnsatz(int n_qubits, int depth,
                                   Entangler entangler, bool reupload) {
  AnsatzOptions o;
  o.n_qubits = n_qubits;
  o.depth = depth;
  o.entangler = entangler;
  o.reupload = reupload;
  return BuildLayeredAnsatz(o);
}

double GateAngle(const GateSpec& g, std::span<const double> theta,
                 std::span<const double> x) {
  if (const auto* tr = std::get_if<Trainable>(&g.binding)) {
    return theta[tr->param];
  }
  if (const auto* db = std::get_if<DataBound>(&g.binding)) {
    return db->scale * x[db->feature];
  }
  if (const auto* fa = std::get_if<FixedAngle>(&g.binding)) {
    return fa->radians;
  }
  return 0.0;
}

State Execute(const CircuitTemplate& t, std::span<const double> theta,
              std::span<const double> x) {
  return RunState(t, theta, x, kNoShift, 0.0);
}

qcore::PureState ExecutePure(const CircuitTemplate& t,
                             std::span<const double> theta,
                             std::span<const double> x) {
  Require(!t.noisy(), "pure-state execution requires a noiseless template");
  return std::get<qcore::PureState>(Execute(t, theta, x));
}

qcore::CVector ExecuteShifted(const CircuitTemplate& t,
                              std::span<const double> theta,
                              std::span<const double> x,
                              std::size_t gate_index, double shift) {
  Require(!t.noisy(), "pure-state execution requires a noiseless template");
  CheckInputs(t, theta, x);
  return RunPure(t, theta, x, gate_index, shift);
}

qcore::CVector ExecuteDerivative(const CircuitTemplate& t,
                                 std::span<const double> theta,
                                 std::span<const double> x,
                                 std::size_t gate_index) {
  Require(!t.noisy(), "derivative states require a noiseless template");
  CheckInputs(t, theta, x);
  Require(gate_index < t.gates().size() && t.gates()[gate_index].is_rotation(),
          "derivative gate must be a rotation");
  return RunPure(t, theta, x, kNoShift, 0.0, gate_index);
}

double Predict(const CircuitTemplate& t, std::span<const double> theta,
               std::span<const double> x) {
  return ExpectationOf(Execute(t, theta, x), t.readout());
}

double PredictShifted(const CircuitTemplate& t, std::span<const double> theta,
                      std::span<const double> x, std::size_t gate_index,
                      double shift) {
  return ExpectationOf(RunState(t, theta, x, gate_index, shift), t.readout());
}

qcore::DensityMatrix AsDensity(const State& s) {
  if (const auto* p = std::get_if<qcore::PureState>(&s)) {
    return qcore::ToDensity(*p);
  }
  return std::get<qcore::DensityMatrix>(s);
}

qcore::DensityMatrix ModelState(const CircuitTemplate& t,
                                std::span<const double> theta,
                                const std::vector<std::vector<double>>& probes) {
  Require(!probes.empty(), "model state needs at least one probe");
  const Eigen::Index d = Eigen::Index{1} << t.n_qubits();
  qcore::CMatrix acc = qcore::CMatrix::Zero(d, d);
  for (const auto& x : probes) {
    acc += AsDensity(Execute(t, theta, x)).matrix();
  }
  acc /= static_cast<double>(probes.size());
  return qcore::MakeTrustedDensity(t.n_qubits(), std::move(acc));
}

ModelDistance CompareModels(const CircuitTemplate& t,
                            std::span<const double> theta_a,
                            std::span<const double> theta_b,
                            const std::vector<std::vector<double>>& probes) {
  const qcore::DensityMatrix a = ModelState(t, theta_a, probes);
  const qcore::DensityMatrix b = ModelState(t, theta_b, probes);
  return ModelDistance{qcore::TraceDistance(a, b), 1.0 - qcore::Fidelity(a, b)};
}

// --- serialization ----------------------------------------------------------

namespace {

GateKind GateKindFromName(const std::string& s) {
  if (s == "RX") return GateKind::kRX;
  if (s == "RY") return GateKind::kRY;
  if (s == "RZ") return GateKind::kRZ;
  if (s == "CNOT") return GateKind::kCNOT;
  if (s == "CZ") return GateKind::kCZ;
  ThrowValidation("template.gates: unknown gate kind '" + s + "'");
}

nlohmann::json ObservableToJson(const qcore::Observable& o) {
  nlohmann::json j;
  if (o.is_dense()) {
    const qcore::CMatrix m = o.ToMatrix();
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json rr = nlohmann::json::array(), ir = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        rr.push_back(m(r, c).real());
        ir.push_back(m(r, c).imag());
      }
      re.push_back(rr);
      im.push_back(ir);
    }
    j["type"] = "dense";
    j["re"] = re;
    j["im"] = im;
  } else {
    j["type"] = "pauli_sum";
    j["terms"] = nlohmann::json::array();
    for (const auto& t : o.terms()) {
      j["terms"].push_back({{"coefficient", t.coefficient}, {"paulis", t.paulis}});
    }
  }
  return j;
}

qcore::Observable ObservableFromJson(const nlohmann::json& j, int n_qubits) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "pauli_sum") {
    std::vector<qcore::PauliTerm> terms;
    for (const auto& t : j.at("terms")) {
      terms.push_back({t.at("coefficient").get<double>(),
                       t.at("paulis").get<std::string>()});
    }
    return qcore::Observable::PauliSum(n_qubits, std::move(terms));
  }
  if (type == "dense") {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const auto d = static_cast<Eigen::Index>(re.size());
    qcore::CMatrix m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        m(r, c) = qcore::Complex(re.at(r).at(c).get<double>(),
                                 im.at(r).at(c).get<double>());
      }
    }
    return qcore::Observable::Dense(std::move(m));
  }
  ThrowValidation("template.readout.type: unknown observable type '" + type +
                  "'");
}

}  // namespace

nlohmann::json TemplateToJson(const CircuitTemplate& t) {
  nlohmann::json gates = nlohmann::json::array();
  for (const GateSpec& g : t.gates()) {
    nlohmann::json jg;
    jg["kind"] = GateKindName(g.kind);
    jg["targets"] = g.targets;
    if (const auto* tr = std::get_if<Trainable>(&g.binding)) {
      jg["binding"] = {{"type", "trainable"}, {"param", tr->param}};
    } else if (const auto* db = std::get_if<DataBound>(&g.binding)) {
      jg["binding"] = {
          {"type", "data"}, {"feature", db->feature}, {"scale", db->scale}};
    } else if (const auto* fa = std::get_if<FixedAngle>(&g.binding)) {
      jg["binding"] = {{"type", "fixed"}, {"radians", fa->radians}};
    }
    gates.push_back(jg);
  }
  nlohmann::json j;
  j["n_qubits"] = t.n_qubits();
  j["n_params"] = t.n_params();
  j["n_features"] = t.n_features();
  j["gates"] = gates;
  j["readout"] = ObservableToJson(t.readout());
  j["noise"] = t.noise() ? nlohmann::json(*t.noise()) : nlohmann::json(nullptr);
  j["noise_sites"] = t.noise_sites();
  return j;
}

CircuitTemplate TemplateFromJson(const nlohmann::json& j) {
  try {
    const int n = j.at("n_qubits").get<int>();
    std::vector<GateSpec> gates;
    for (const auto& jg : j.at("gates")) {
      GateSpec g;
      g.kind = GateKindFromName(jg.at("kind").get<std::string>());
      g.targets = jg.at("targets").get<std::vector<int>>();
      if (jg.contains("binding")) {
        const auto& b = jg.at("binding");
        const std::string type = b.at("type").get<std::string>();
        if (type == "trainable") {
          g.binding = Trainable{b.at("param").get<std::size_t>()};
        } else if (type == "data") {
          g.binding = DataBound{b.at("feature").get<std::size_t>(),
                                b.value("scale", 1.0)};
        } else if (type == "fixed") {
          g.binding = FixedAngle{b.at("radians").get<double>()};
        } else {
          ThrowValidation("template.gates.binding.type: unknown '" + type +
                          "'");
        }
      }
      gates.push_back(std::move(g));
    }
    std::optional<double> noise;
    if (j.contains("noise") && !j.at("noise").is_null()) {
      noise = j.at("noise").get<double>();
    }
    std::vector<std::size_t> sites;
    if (j.contains("noise_sites")) {
      sites = j.at("noise_sites").get<std::vector<std::size_t>>();
    }
    qcore::Observable readout =
        j.contains("readout") ? ObservableFromJson(j.at("readout"), n)
                              : qcore::Observable::Z(n, 0);
    return CircuitTemplate(n, std::move(gates), j.at("n_params").get<std::size_t>(),
                           j.at("n_features").get<std::size_t>(),
                           std::move(readout), noise, std::move(sites));
  } catch (const nlohmann::json::exception& e) {
    ThrowValidation(std::string("template: ") + e.what());
  }
}

}  // namespace qmu::pqc
