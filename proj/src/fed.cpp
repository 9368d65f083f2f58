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

#include "qmu/fed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "qmu/common.hpp"
#include "qmu/pqc.hpp"
#include "qmu/unlearn.hpp"

namespace qmu::fed {
namespace {

constexpr double kMaskTolerance = 1e-9;
constexpr int kMaxJointClients = 3;

std::string DigestMessages(const std::vector<geo::GradVector>& msgs) {
  std::string text;
  char buf[32];
  for (const auto& m : msgs) {
    for (double v : m) {
      std::snprintf(buf, sizeof(buf), "%.17g,", v);
      text += buf;
    }
    text += '\n';
  }
  return Sha256Hex(text);
}

// One aggregation round without the client-count precondition; retraining
// after a client removal may leave a single participant.
const RoundRecord& RunRound(FedState& state, const learn::Dataset& data,
                            const FedConfig& cfg) {
  const std::size_t m = state.clients.size();
  Require(m >= 1, "no clients left to aggregate");
  const std::size_t p = state.theta.size();
  std::vector<geo::GradVector> updates;
  updates.reserve(m);
  for (const ClientSpec& c : state.clients) {
    if (c.shard.empty()) {
      updates.emplace_back(p, 0.0);
    } else {
      updates.push_back(
          LocalUpdate(c, *state.circuit, state.theta, data, cfg.loss));
    }
  }
  const MaskSet masks =
      GenerateMasks(m, p, cfg.topology,
                    DeriveSeed(cfg.seed, "mask", static_cast<std::uint64_t>(
                                                     state.round)),
                    cfg.mask_scale);
  const Aggregate agg = SecureAggregate(updates, masks);

  RoundRecord rec;
  rec.round = state.round;
  for (const ClientSpec& c : state.clients) rec.participants.push_back(c.id);
  rec.masked_digest = DigestMessages(agg.masked);
  rec.aggregate = agg.sum;
  for (std::size_t k = 0; k < p; ++k) {
    double plain = 0.0;
    for (const auto& u : updates) plain += u[k];
    rec.mask_residual = std::max(rec.mask_residual, std::abs(agg.sum[k] - plain));
  }
  if (rec.mask_residual > kMaskTolerance) {
    ThrowInvariant("masked aggregate differs from the plain sum");
  }

  geo::GradVector noisy = agg.sum;
  bool flagged = false;
  if (cfg.dp_enabled) {
    const privacy::SigmaResult s = cfg.dp.Calibrate();
    rec.sigma = s.sigma;
    flagged = s.outside_proof_regime;
    Rng rng(DeriveSeed(cfg.seed, "noise", static_cast<std::uint64_t>(state.round)));
    noisy = privacy::AddNoise(agg.sum, rec.sigma, rng);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < p; ++k) {
    state.theta[k] -= cfg.learning_rate * noisy[k] * inv_m;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      state.contributions[i][k] += updates[i][k] * inv_m;
    }
  }
  const double clip = state.clients.front().clip_norm;
  state.ledger.Record(rec.sigma, clip, privacy::kGaussianMechanism, flagged);
  const privacy::Composition comp = state.ledger.Compose(cfg.dp.delta);
  rec.epsilon = comp.rdp_epsilon;
  rec.naive_epsilon = comp.naive_epsilon;
  ++state.round;
  state.history.push_back(std::move(rec));
  return state.history.back();
}

qcore::DensityMatrix BlockState(const pqc::CircuitTemplate& enc,
                                std::span<const double> theta,
                                const learn::Dataset& data,
                                const ClientSpec* client) {
  if (client == nullptr || client->shard.empty()) {
    return qcore::ToDensity(qcore::PureState::Zero(2));
  }
  return pqc::ModelState(enc, theta, data.Rows(client->shard));
}

// Joint register over `owners`; blocks whose owner is in `zeroed` hold |00>.
qcore::DensityMatrix JointState(const FedState& state,
                                const learn::Dataset& data,
                                const std::vector<ClientSpec>& clients,
                                const std::vector<int>& zeroed) {
  pqc::AnsatzOptions opts;
  opts.n_qubits = 2;
  opts.depth = 1;
  opts.reupload = false;
  opts.n_features = data.n_features();
  const pqc::CircuitTemplate enc = pqc::BuildLayeredAnsatz(opts);
  const pqc::ParamVector theta = learn::InitialParams(
      enc.n_params(), DeriveSeed(state.joint_seed, "joint"));
  std::optional<qcore::DensityMatrix> rho;
  for (int owner : state.joint_owners) {
    const ClientSpec* c = nullptr;
    if (std::find(zeroed.begin(), zeroed.end(), owner) == zeroed.end()) {
      for (const ClientSpec& k : clients) {
        if (k.id == owner) c = &k;
      }
    }
    qcore::DensityMatrix block = BlockState(enc, theta, data, c);
    rho = rho ? qcore::Tensor(*rho, block) : block;
  }
  const int n = rho->n_qubits();
  for (int q = 1; q + 1 < n; q += 2) {
    const int targets[2] = {q, q + 1};
    rho = qcore::ApplyUnitary(*rho, qcore::CnotMatrix(), targets);
  }
  return *rho;
}

}  // namespace

const char* TopologyName(Topology t) {
  return t == Topology::kStar ? "star" : "ring";
}

const char* UnlearnModeName(UnlearnMode m) {
  return m == UnlearnMode::kGradientSubtract ? "gradient_subtract" : "channel";
}

void MaskSet::Validate() const {
  Require(!masks.empty(), "mask set is empty");
  const std::size_t p = masks.front().size();
  for (std::size_t k = 0; k < p; ++k) {
    double s = 0.0;
    for (const auto& m : masks) {
      Require(m.size() == p, "masks have different lengths");
      s += m[k];
    }
    Require(std::abs(s) <= kMaskTolerance, "masks do not sum to zero");
  }
}

MaskSet GenerateMasks(std::size_t n_clients, std::size_t n_params,
                      Topology topology, std::uint64_t seed, double scale) {
  Require(n_clients >= 1, "mask set needs at least one client");
  Require(scale >= 0.0, "mask scale must be non-negative");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  auto draw = [&] {
    geo::GradVector v(n_params);
    for (double& x : v) x = scale > 0.0 ? normal(rng) : 0.0;
    return v;
  };
  MaskSet out;
  out.masks.assign(n_clients, geo::GradVector(n_params, 0.0));
  if (n_clients == 1) return out;
  if (topology == Topology::kStar) {
    for (std::size_t i = 0; i + 1 < n_clients; ++i) {
      out.masks[i] = draw();
      for (std::size_t k = 0; k < n_params; ++k) {
        out.masks[n_clients - 1][k] -= out.masks[i][k];
      }
    }
  } else {
    std::vector<geo::GradVector> r(n_clients);
    for (auto& v : r) v = draw();
    for (std::size_t i = 0; i < n_clients; ++i) {
      const auto& prev = r[(i + n_clients - 1) % n_clients];
      for (std::size_t k = 0; k < n_params; ++k) {
        out.masks[i][k] = r[i][k] - prev[k];
      }
    }
  }
  return out;
}

std::vector<ClientSpec> ShardClients(const learn::Dataset& data,
                                     std::size_t n_clients, double clip_norm,
                                     std::uint64_t seed) {
  Require(n_clients >= 1, "federation needs at least one client");
  Require(clip_norm > 0.0, "clip norm must be positive");
  std::vector<std::size_t> rows = data.Indices(learn::Subset::kTrain);
  Rng rng(DeriveSeed(seed, "shard"));
  std::shuffle(rows.begin(), rows.end(), rng);
  std::vector<ClientSpec> clients(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    clients[i].id = static_cast<int>(i);
    clients[i].clip_norm = clip_norm;
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    clients[j % n_clients].shard.push_back(rows[j]);
  }
  for (auto& c : clients) std::sort(c.shard.begin(), c.shard.end());
  return clients;
}

geo::GradVector LocalUpdate(const ClientSpec& client,
                            const pqc::CircuitTemplate& t,
                            std::span<const double> theta,
                            const learn::Dataset& data, geo::LossSpec loss) {
  Require(!client.shard.empty(),
          "client " + std::to_string(client.id) + " has an empty shard");
  const geo::GradVector g = geo::ParameterShiftGradient(
      t, theta, data.MakeBatch(client.shard), loss);
  return privacy::Clip(g, client.clip_norm);
}

Aggregate SecureAggregate(const std::vector<geo::GradVector>& updates,
                          const MaskSet& masks) {
  Require(!updates.empty(), "no updates to aggregate");
  Require(masks.masks.size() == updates.size(),
          "mask count does not match client count");
  masks.Validate();
  const std::size_t p = updates.front().size();
  Aggregate out;
  out.sum.assign(p, 0.0);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    Require(updates[i].size() == p && masks.masks[i].size() == p,
            "update and mask lengths differ");
    geo::GradVector msg(p);
    for (std::size_t k = 0; k < p; ++k) {
      msg[k] = updates[i][k] + masks.masks[i][k];
      out.sum[k] += msg[k];
    }
    out.masked.push_back(std::move(msg));
  }
  return out;
}

std::size_t FedState::ClientIndex(int id) const {
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].id == id) return i;
  }
  ThrowValidation("unknown client " + std::to_string(id));
}

FedState InitState(std::shared_ptr<const pqc::CircuitTemplate> circuit,
                   std::vector<ClientSpec> clients, std::uint64_t seed) {
  Require(circuit != nullptr, "federation needs a circuit");
  FedState s;
  s.theta = learn::InitialParams(circuit->n_params(), DeriveSeed(seed, "init"));
  s.circuit = std::move(circuit);
  s.contributions.assign(clients.size(),
                         geo::GradVector(s.theta.size(), 0.0));
  for (std::size_t i = 0; i < clients.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      Require(clients[i].id != clients[j].id, "duplicate client id");
    }
    Require(clients[i].clip_norm > 0.0, "client clip norm must be positive");
    Require(clients[i].local_epochs >= 1, "local_epochs must be at least 1");
  }
  s.clients = std::move(clients);
  s.joint_seed = seed;
  return s;
}

const RoundRecord& FedRound(FedState& state, const learn::Dataset& data,
                            const FedConfig& cfg) {
  Require(state.clients.size() >= 2, "a federated round needs two clients");
  Require(cfg.learning_rate > 0.0, "fed.learning_rate must be positive");
  if (cfg.dp_enabled) cfg.dp.Validate();
  return RunRound(state, data, cfg);
}

void BuildJointRegister(FedState& state, const learn::Dataset& data,
                        std::uint64_t seed) {
  Require(!state.clients.empty(), "joint register needs clients");
  Require(static_cast<int>(state.clients.size()) <= kMaxJointClients,
          "joint register supports at most three clients");
  state.joint_seed = seed;
  state.joint_owners.clear();
  for (const ClientSpec& c : state.clients) state.joint_owners.push_back(c.id);
  state.joint = JointState(state, data, state.clients, {});
}

ClientUnlearnTrace UnlearnClient(FedState& state, const learn::Dataset& data,
                                 int client_id, const ClientUnlearnConfig& cfg,
                                 const FedConfig& fed_cfg) {
  const std::size_t idx = state.ClientIndex(client_id);
  ClientUnlearnTrace tr;
  tr.client = client_id;
  tr.mode = cfg.mode;
  tr.theta_before = state.theta;

  if (cfg.mode == UnlearnMode::kGradientSubtract) {
    const double alpha = cfg.alpha.value_or(fed_cfg.learning_rate);
    Require(alpha >= 0.0, "unlearn alpha must be non-negative");
    Require(cfg.retrain_rounds >= 0, "retrain_rounds must be non-negative");
    for (std::size_t k = 0; k < state.theta.size(); ++k) {
      state.theta[k] += alpha * state.contributions[idx][k];
    }
  } else {
    Require(state.joint.has_value(),
            "channel unlearning needs the joint register");
    const auto owner = std::find(state.joint_owners.begin(),
                                 state.joint_owners.end(), client_id);
    Require(owner != state.joint_owners.end(),
            "client has no block in the joint register");
    const int b = static_cast<int>(owner - state.joint_owners.begin());
    const int block[2] = {2 * b, 2 * b + 1};
    std::vector<int> zeroed = state.removed;
    zeroed.push_back(client_id);
    const qcore::DensityMatrix reference = unlearn::ClientForget(
        JointState(state, data, state.clients, zeroed), block);
    const qcore::DensityMatrix forgotten =
        unlearn::ClientForget(*state.joint, block);
    tr.channel_distance_before = qcore::TraceDistance(*state.joint, reference);
    tr.channel_distance_after = qcore::TraceDistance(forgotten, reference);
    if (tr.channel_distance_after > tr.channel_distance_before + 1e-9) {
      ThrowInvariant("client channel increased distance to the reference");
    }
    state.joint = forgotten;
  }
  tr.theta_subtracted = state.theta;

  state.clients.erase(state.clients.begin() + static_cast<std::ptrdiff_t>(idx));
  state.contributions.erase(state.contributions.begin() +
                            static_cast<std::ptrdiff_t>(idx));
  state.removed.push_back(client_id);

  if (cfg.mode == UnlearnMode::kGradientSubtract) {
    for (int r = 0; r < cfg.retrain_rounds && !state.clients.empty(); ++r) {
      RunRound(state, data, fed_cfg);
    }
  }
  tr.theta_after = state.theta;
  return tr;
}

SimulationResult RunSimulation(std::shared_ptr<const pqc::CircuitTemplate> c,
                               const learn::Dataset& data,
                               const SimulationConfig& cfg) {
  const FedConfig& fc = cfg.fed;
  Require(fc.rounds >= 0, "fed.rounds must be non-negative");
  Require(fc.learning_rate > 0.0, "fed.learning_rate must be positive");
  Require(cfg.n_clients >= 2, "fed.clients must be at least 2");
  if (fc.dp_enabled) fc.dp.Validate();
  for (const UnlearnEvent& e : cfg.events) {
    Require(e.round >= 0 && e.round <= fc.rounds,
            "fed.unlearn_events.round is outside the schedule");
    Require(e.client >= 0 && static_cast<std::size_t>(e.client) < cfg.n_clients,
            "fed.unlearn_events.client is unknown");
  }

  SimulationResult res;
  res.state = InitState(c, ShardClients(data, cfg.n_clients, fc.dp.clip_norm,
                                        fc.seed),
                        fc.seed);
  res.initial_theta = res.state.theta;
  if (cfg.joint_register) BuildJointRegister(res.state, data, fc.seed);

  std::vector<std::size_t> probe_rows = data.Indices(learn::Subset::kTest);
  if (probe_rows.empty()) probe_rows = data.Indices(learn::Subset::kTrain);
  const auto probes = data.Rows(probe_rows);

  auto apply_events = [&](int at) {
    for (const UnlearnEvent& e : cfg.events) {
      if (e.round != at) continue;
      EventRecord rec;
      rec.event = e;
      rec.trace = UnlearnClient(res.state, data, e.client, e.config, fc);
      res.events.push_back(std::move(rec));
    }
  };
  for (int r = 0; r < fc.rounds; ++r) {
    apply_events(r);
    if (res.state.clients.size() >= 2) {
      FedRound(res.state, data, fc);
    } else if (!res.state.clients.empty()) {
      RunRound(res.state, data, fc);
    }
  }
  apply_events(fc.rounds);

  // Noise-free, mask-free descent on the surviving clients for as many
  // server steps as the run took.
  res.counterfactual = res.initial_theta;
  if (!res.state.clients.empty()) {
    const double inv_m = 1.0 / static_cast<double>(res.state.clients.size());
    for (int r = 0; r < res.state.round; ++r) {
      geo::GradVector sum(res.counterfactual.size(), 0.0);
      for (const ClientSpec& client : res.state.clients) {
        if (client.shard.empty()) continue;
        const auto g = LocalUpdate(client, *c, res.counterfactual, data, fc.loss);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g[k];
      }
      for (std::size_t k = 0; k < sum.size(); ++k) {
        res.counterfactual[k] -= fc.learning_rate * sum[k] * inv_m;
      }
    }
  }
  for (EventRecord& e : res.events) {
    e.distance_before = pqc::CompareModels(*c, e.trace.theta_before,
                                           res.counterfactual, probes)
                            .trace_distance;
    e.distance_after = pqc::CompareModels(*c, e.trace.theta_after,
                                          res.counterfactual, probes)
                           .trace_distance;
  }
  return res;
}

nlohmann::json SimulationResult::ToJson() const {
  using nlohmann::json;
  json rounds = json::array();
  for (const RoundRecord& r : state.history) {
    rounds.push_back({{"round", r.round},
                      {"participants", r.participants},
                      {"masked_digest", r.masked_digest},
                      {"aggregate", r.aggregate},
                      {"mask_residual", r.mask_residual},
                      {"sigma", r.sigma},
                      {"epsilon", privacy::JsonNumber(r.epsilon)},
                      {"naive_epsilon", privacy::JsonNumber(r.naive_epsilon)}});
  }
  json events = json::array();
  for (const EventRecord& e : this->events) {
    json ev = {{"round", e.event.round},
               {"client", e.event.client},
               {"mode", UnlearnModeName(e.event.config.mode)},
               {"retrain_rounds", e.event.config.retrain_rounds},
               {"theta_before", e.trace.theta_before},
               {"theta_after", e.trace.theta_after},
               {"distance_before", e.distance_before},
               {"distance_after", e.distance_after}};
    if (e.event.config.mode == UnlearnMode::kChannel) {
      ev["channel_distance_before"] = e.trace.channel_distance_before;
      ev["channel_distance_after"] = e.trace.channel_distance_after;
    }
    events.push_back(std::move(ev));
  }
  std::vector<int> remaining;
  for (const ClientSpec& cl : state.clients) remaining.push_back(cl.id);
  return json{{"initial_theta", initial_theta},
              {"final_theta", state.theta},
              {"counterfactual_theta", counterfactual},
              {"rounds", std::move(rounds)},
              {"unlearn_events", std::move(events)},
              {"remaining_clients", remaining},
              {"removed_clients", state.removed}};
}

}  // namespace qmu::fed
