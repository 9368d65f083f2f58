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


#ifndef QMU_TESTS_FIXTURES_HPP_
#define QMU_TESTS_FIXTURES_HPP_

#include <memory>
#include <random>
#include <vector>

#include "qmu/common.hpp"
#include "qmu/datasets.hpp"
#include "qmu/learn.hpp"
#include "qmu/pqc.hpp"

namespace qmu::fixture {

// Random template: every rotation kind, fixed and data angles, CZ and CNOT,
// and parameters that occur on more than one gate.
inline pqc::CircuitTemplate RandomCircuit(int n, int depth, std::uint64_t seed,
                                          std::size_t n_features = 2) {
  Rng rng(seed);
  std::uniform_int_distribution<int> qubit(0, n - 1), kind(0, 2);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::vector<pqc::GateSpec> gates;
  std::size_t p = 0;
  const pqc::GateKind rot[] = {pqc::GateKind::kRX, pqc::GateKind::kRY,
                               pqc::GateKind::kRZ};
  for (int l = 0; l < depth; ++l) {
    gates.push_back({pqc::GateKind::kRY, {qubit(rng)},
                     pqc::DataBound{static_cast<std::size_t>(l) % n_features,
                                    0.8}});
    for (int q = 0; q < n; ++q) {
      gates.push_back({rot[kind(rng)], {q}, pqc::Trainable{p++}});
    }
    gates.push_back({rot[kind(rng)], {qubit(rng)}, pqc::FixedAngle{angle(rng)}});
    if (l > 0) {
      // Reuse a parameter from the previous layer.
      gates.push_back({rot[kind(rng)], {qubit(rng)}, pqc::Trainable{p - n - 1}});
    }
    for (int q = 0; q + 1 < n; ++q) {
      gates.push_back({l % 2 ? pqc::GateKind::kCZ : pqc::GateKind::kCNOT,
                       {q, q + 1},
                       std::monostate{}});
    }
  }
  return pqc::CircuitTemplate(n, std::move(gates), p, n_features,
                              qcore::Observable::Z(n, 0));
}

inline std::vector<double> RandomVector(std::size_t n, std::uint64_t seed,
                                        double half_width = 3.14159) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::shared_ptr<const pqc::CircuitTemplate> Ansatz(
    int n, int depth, bool reupload = false) {
  pqc::AnsatzOptions o;
  o.n_qubits = n;
  o.depth = depth;
  o.n_features = 2;
  o.reupload = reupload;
  return std::make_shared<const pqc::CircuitTemplate>(
      pqc::BuildLayeredAnsatz(o));
}

// Two moons with a 15-row sub-cluster of class +1 marked for forgetting.
inline learn::Dataset MoonsWithCluster(std::uint64_t seed, std::size_t n = 100) {
  auto d = data::GenerateDataset("two_moons", n, 0.1, DeriveSeed(seed, "dataset"));
  return d.WithForgetMask(data::ForgetCluster(d, 1, 15));
}

}  // namespace qmu::fixture

#endif  // QMU_TESTS_FIXTURES_HPP_
