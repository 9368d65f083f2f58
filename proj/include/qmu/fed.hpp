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

#ifndef QMU_FED_HPP_
#define QMU_FED_HPP_

// Deterministic federated simulation. Secure aggregation is simulated with
// additive zero-sum masks drawn from a trusted round seed; no key exchange
// takes place.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmu/geo.hpp"
#include "qmu/learn.hpp"
#include "qmu/privacy.hpp"
#include "qmu/qcore.hpp"

namespace qmu::fed {

struct ClientSpec {
  int id = 0;
  std::vector<std::size_t> shard;  // dataset row indices
  int local_epochs = 1;
  double clip_norm = 1.0;
};

enum class Topology { kStar, kRing };

struct MaskSet {
  std::vector<geo::GradVector> masks;
  // Sum over clients is zero within 1e-9 elementwise; throws otherwise.
  void Validate() const;
};

// Star: the server hands out n-1 random masks and the negated sum. Ring:
// neighbours share r_i and client i holds r_i - r_{i-1}.
MaskSet GenerateMasks(std::size_t n_clients, std::size_t n_params,
                      Topology topology, std::uint64_t seed,
                      double scale = 1.0);

// Deals the train rows into `n_clients` disjoint shards.
std::vector<ClientSpec> ShardClients(const learn::Dataset& data,
                                     std::size_t n_clients, double clip_norm,
                                     std::uint64_t seed);

// clip(mean parameter-shift gradient over the shard, C).
geo::GradVector LocalUpdate(const ClientSpec& client,
                            const pqc::CircuitTemplate& t,
                            std::span<const double> theta,
                            const learn::Dataset& data, geo::LossSpec loss);

struct Aggregate {
  geo::GradVector sum;
  // What the aggregator observes: g_i + m_i per client.
  std::vector<geo::GradVector> masked;
};
Aggregate SecureAggregate(const std::vector<geo::GradVector>& updates,
                          const MaskSet& masks);

struct RoundRecord {
  int round = 0;
  std::vector<int> participants;
  std::string masked_digest;
  geo::GradVector aggregate;
  // max |sum(g_i + m_i) - sum(g_i)| for this round.
  double mask_residual = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;  // cumulative RDP epsilon after this round
  double naive_epsilon = 0.0;
};

struct FedConfig {
  int rounds = 10;
  double learning_rate = 0.1;
  Topology topology = Topology::kStar;
  privacy::DPConfig dp{};
  bool dp_enabled = false;
  double mask_scale = 1.0;
  std::uint64_t seed = 0;
  geo::LossSpec loss{};
};

struct FedState {
  std::shared_ptr<const pqc::CircuitTemplate> circuit;
  pqc::ParamVector theta;
  std::vector<ClientSpec> clients;
  // Per-client running sum of g_i / m over the rounds it joined.
  std::vector<geo::GradVector> contributions;
  privacy::PrivacyLedger ledger;
  std::vector<RoundRecord> history;
  int round = 0;
  // Joint register of the channel demo with each client's qubit block.
  std::optional<qcore::DensityMatrix> joint;
  std::vector<int> joint_owners;  // client id of block i = qubits {2i, 2i+1}
  std::uint64_t joint_seed = 0;
  std::vector<int> removed;

  std::size_t ClientIndex(int id) const;
};

FedState InitState(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                   std::vector<ClientSpec> clients, std::uint64_t seed);

// Local updates, zero-sum masks from the round seed, secure aggregation,
// Gaussian noise, theta <- theta - eta (G + noise) / m, ledger entry.
// Clients with empty shards send a zero update.
const RoundRecord& FedRound(FedState& state, const learn::Dataset& data,
                            const FedConfig& cfg);

enum class UnlearnMode { kGradientSubtract, kChannel };

struct ClientUnlearnConfig {
  UnlearnMode mode = UnlearnMode::kGradientSubtract;
  std::optional<double> alpha;  // defaults to the server learning rate
  int retrain_rounds = 3;
};

struct ClientUnlearnTrace {
  int client = 0;
  UnlearnMode mode = UnlearnMode::kGradientSubtract;
  pqc::ParamVector theta_before;
  pqc::ParamVector theta_subtracted;
  pqc::ParamVector theta_after;
  // Channel mode: distances of the joint register to the product reference.
  double channel_distance_before = 0.0;
  double channel_distance_after = 0.0;
};

// Builds the joint demo register: each client owns a two-qubit block
// holding its shard's probe-averaged encoding, neighbouring blocks are
// coupled by a CNOT. At most three clients.
void BuildJointRegister(FedState& state, const learn::Dataset& data,
                        std::uint64_t seed);

// Removes the client from all future rounds.
ClientUnlearnTrace UnlearnClient(FedState& state, const learn::Dataset& data,
                                 int client_id, const ClientUnlearnConfig& cfg,
                                 const FedConfig& fed_cfg);

struct UnlearnEvent {
  int round = 0;  // applied once this many rounds have completed
  int client = 0;
  ClientUnlearnConfig config{};
};

struct SimulationConfig {
  FedConfig fed{};
  std::size_t n_clients = 3;
  std::vector<UnlearnEvent> events;
  bool joint_register = false;
};

struct EventRecord {
  UnlearnEvent event;
  ClientUnlearnTrace trace;
  // Trace distance to the counterfactual on the test probes.
  double distance_before = 0.0;
  double distance_after = 0.0;
};

struct SimulationResult {
  FedState state;
  pqc::ParamVector initial_theta;
  std::vector<EventRecord> events;
  // Full-batch descent on the union of shards kept after every event.
  pqc::ParamVector counterfactual;
  nlohmann::json ToJson() const;
};

SimulationResult RunSimulation(std::shared_ptr<const pqc::CircuitTemplate> c,
                               const learn::Dataset& data,
                               const SimulationConfig& cfg);

const char* TopologyName(Topology t);
const char* UnlearnModeName(UnlearnMode m);

}  // namespace qmu::fed

#endif  // QMU_FED_HPP_
