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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
// Usage: acceptance <path-to-qmu-cli> <scratch-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qmu/audit.hpp"
#include "qmu/fed.hpp"
#include "qmu/geo.hpp"
#include "qmu/privacy.hpp"
#include "qmu/qcore.hpp"
#include "qmu/qkernel.hpp"
#include "qmu/unlearn.hpp"

namespace qmu {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<int> AllQubits(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// 1. Contraction of trace distance and monotonicity of fidelity.
Outcome DataProcessing() {
  int td = 0, fid = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const int n = 1 + static_cast<int>(s % 3);
    const auto rho = qcore::RandomState(n, DeriveSeed(s, "rho"));
    const auto sigma = qcore::RandomState(n, DeriveSeed(s, "sigma"));
    const auto ch = qcore::RandomChannel(n, DeriveSeed(s, "channel"));
    const auto all = AllQubits(n);
    const auto er = qcore::ApplyChannel(rho, ch, all);
    const auto es = qcore::ApplyChannel(sigma, ch, all);
    const double gap = qcore::TraceDistance(er, es) - qcore::TraceDistance(rho, sigma);
    worst = std::max(worst, gap);
    td += gap > 1e-9;
    fid += qcore::Fidelity(er, es) < qcore::Fidelity(rho, sigma) - 1e-9;
  }
  return {td == 0 && fid == 0,
          Fmt("200 triples, trace violations %d, fidelity violations %d, "
              "max D(E rho, E sigma) - D(rho, sigma) = %.2e",
              td, fid, worst)};
}

// 2. Parameter-shift gradients against central differences of the
// reference simulator.
Outcome GradientExactness() {
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t s = 0; s < 120; ++s) {
    const int n = 1 + static_cast<int>(s % 4);
    const int depth = 1 + static_cast<int>((s / 4) % 6);
    pqc::CircuitTemplate t =
        s % 2 ? fixture::RandomCircuit(n, depth, DeriveSeed(s, "circuit"))
              : pqc::BuildLayeredAnsatz(
                    pqc::AnsatzOptions{n, depth,
                                       s % 4 == 0 ? pqc::Entangler::kRing
                                                  : pqc::Entangler::kLinear,
                                       s % 3 != 0, 2, 1.0, std::nullopt});
    const auto theta = fixture::RandomVector(t.n_params(), DeriveSeed(s, "theta"));
    const std::size_t b = 1 + s % 4;
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < b; ++i) {
      xs.push_back(fixture::RandomVector(2, DeriveSeed(s, "x", i), 1.5));
      ys.push_back(i % 2 ? 1 : -1);
    }
    geo::Batch batch;
    for (std::size_t i = 0; i < b; ++i) batch.Add(xs[i], ys[i]);
    const geo::LossSpec loss{s % 5 == 0 ? geo::LossKind::kLogistic
                                        : geo::LossKind::kMse};
    const oracle::Mat z = oracle::Embed(oracle::Pauli('Z'), 0, n);
    auto batch_loss = [&](const std::vector<double>& th) {
      double sum = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const oracle::Vec psi = oracle::Statevector(t, th, xs[i]);
        sum += geo::Loss(loss, psi.dot(z * psi).real(), ys[i]);
      }
      return sum / static_cast<double>(b);
    };
    const auto g = geo::ParameterShiftGradient(t, theta, batch, loss);
    const double h = 1e-5;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (batch_loss(tp) - batch_loss(tm)) / (2 * h);
      worst = std::max(worst, std::abs(g[i] - fd));
    }
    ++instances;
  }
  return {worst <= 1e-6,
          Fmt("%d instances, max |shift - central difference| = %.2e (tol 1e-6)",
              instances, worst)};
}

// 3. QFIM structure, the single-rotation value and the Fubini-Study overlap.
Outcome QfimCorrectness() {
  const pqc::CircuitTemplate ry(
      1, {{pqc::GateKind::kRY, {0}, pqc::Trainable{0}}}, 1, 1,
      qcore::Observable::Z(1, 0));
  const std::vector<double> th{0.37}, x0{0.0};
  const double single = geo::ComputeQfim(ry, th, x0).matrix(0, 0);

  double asym = 0.0, min_eig = 0.0, worst_rel = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int n = 1 + static_cast<int>(s % 4);
    const auto t = fixture::RandomCircuit(n, 1 + static_cast<int>(s % 5),
                                          DeriveSeed(s, "qfim"));
    const auto theta = fixture::RandomVector(t.n_params(), DeriveSeed(s, "theta"));
    const auto x = fixture::RandomVector(2, DeriveSeed(s, "x"), 1.5);
    const Eigen::MatrixXd f = geo::ComputeQfim(t, theta, x).matrix;
    asym = std::max(asym, (f - f.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());

    auto dir = fixture::RandomVector(t.n_params(), DeriveSeed(s, "eps"), 1.0);
    Eigen::VectorXd eps = Eigen::Map<Eigen::VectorXd>(dir.data(), dir.size());
    eps *= 1e-3 / eps.norm();
    auto shifted = theta;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += eps(i);
    const double overlap =
        1.0 - std::norm(oracle::Statevector(t, theta, x)
                            .dot(oracle::Statevector(t, shifted, x)));
    const double quad = eps.dot(f * eps);
    worst_rel = std::max(worst_rel, std::abs(overlap - quad) / quad);
  }
  const bool ok = std::abs(single - 0.25) <= 1e-9 && asym <= 1e-12 &&
                  min_eig >= -1e-8 && worst_rel <= 0.01;
  return {ok, Fmt("single RY %.12f, max asymmetry %.1e, min eigenvalue %.1e, "
                  "50 instances max Fubini-Study relative error %.2e (tol 1e-2)",
                  single, asym, min_eig, worst_rel)};
}

std::vector<std::vector<double>> KernelPoints(std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> p;
  for (std::size_t i = 0; i < n; ++i) {
    p.push_back(fixture::RandomVector(2, DeriveSeed(seed, "point", i), 1.5));
  }
  return p;
}

qkernel::FeatureMap KernelMap(std::uint64_t seed) {
  pqc::AnsatzOptions o;
  o.n_qubits = 2 + static_cast<int>(seed % 2);
  o.depth = 1 + static_cast<int>(seed % 2);
  o.n_features = 2;
  return qkernel::MakeFeatureMap(o, DeriveSeed(seed, "map"));
}

Eigen::VectorXd KernelLabels(std::size_t n, std::uint64_t seed) {
  const auto v = fixture::RandomVector(n, DeriveSeed(seed, "y"), 1.0);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = v[i] >= 0 ? 1.0 : -1.0;
  return y;
}

std::vector<std::size_t> DeletionIds(std::size_t n, std::size_t r,
                                     std::uint64_t seed) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(DeriveSeed(seed, "delete"));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(r);
  return ids;
}

// 4. Decremental kernel ridge regression against a direct refit.
Outcome SmwExactness() {
  double worst = 0.0, order = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t n = 8 + s % 33;
    const std::size_t r = 1 + s % 5;
    const double lambda = s % 2 ? 0.1 : 0.01;
    const auto pts = KernelPoints(n, s);
    const auto gram = qkernel::Gram(KernelMap(s), pts);
    const Eigen::VectorXd y = KernelLabels(n, s);
    const auto model = qkernel::KrrFit(gram, y, lambda);
    const auto ids = DeletionIds(n, r, s);

    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(ids.begin(), ids.end(), i) == ids.end()) keep.push_back(i);
    }
    const Eigen::VectorXd direct =
        oracle::KrrSolve(gram.matrix(keep, keep), y(keep), lambda);
    const auto batch = qkernel::DeleteSamplesSmw(model, ids);
    worst = std::max(worst, (batch.alpha - direct).cwiseAbs().maxCoeff());

    auto seq = model;
    for (std::size_t id : ids) seq = qkernel::DeleteSamplesSmw(seq, {id});
    if (seq.samples != batch.samples) order = INFINITY;
    order = std::max(order, (seq.alpha - batch.alpha).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8 && order <= 1e-8,
          Fmt("50 instances, max |alpha_smw - alpha_direct| = %.2e, "
              "max |sequential - batch| = %.2e (tol 1e-8)",
              worst, order)};
}

// 5. The implemented deletion certificate dominates the prediction shift.
Outcome CertificateSoundness() {
  int violations = 0, queries = 0;
  double tightest = INFINITY;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 15 + s;
    const auto pts = KernelPoints(n, s + 1000);
    const auto fm = KernelMap(s);
    const auto model =
        qkernel::KrrFit(qkernel::Gram(fm, pts), KernelLabels(n, s + 1000), 0.05);
    const auto ids = DeletionIds(n, 1 + s % 5, s + 1000);
    const auto after = qkernel::DeleteSamplesSmw(model, ids);
    for (std::uint64_t q = 0; q < 100; ++q) {
      const auto x = fixture::RandomVector(2, DeriveSeed(s, "query", q), 1.5);
      const Eigen::VectorXd kx = qkernel::KernelVector(fm, pts, x);
      double shift = 0.0;
      {
        Eigen::VectorXd ks(after.size()), alpha_s(after.size());
        for (std::size_t i = 0; i < after.size(); ++i) {
          const std::size_t pos = model.PositionOf(after.samples[i]);
          ks(i) = kx(pos);
          alpha_s(i) = model.alpha(pos);
        }
        shift = std::abs(ks.dot(after.alpha) - ks.dot(alpha_s));
      }
      const double bound = qkernel::DeviationBound(model, ids, kx);
      violations += shift > bound;
      if (bound > 0) tightest = std::min(tightest, bound - shift);
      ++queries;
    }
  }
  return {violations == 0,
          Fmt("%d queries over 20 instances, violations %d, min slack %.2e",
              queries, violations, tightest)};
}

learn::TrainConfig BenchmarkTraining(std::uint64_t seed) {
  learn::TrainConfig c;
  c.learning_rate = 0.1;
  c.epochs = 60;
  c.batch_size = 16;
  c.seed = DeriveSeed(seed, "train");
  return c;
}

// 6. QMU-I on the two-moons benchmark, 20 seeds.
Outcome QmuIEfficacy() {
  const auto circuit = fixture::Ansatz(2, 2, false);
  int contracted = 0, retained = 0, mia = 0;
  double before = 0.0, after = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const learn::Dataset data = fixture::MoonsWithCluster(s, 100);
    const learn::TrainConfig tc = BenchmarkTraining(s);
    const auto model = learn::Train(circuit, data, tc);
    const auto cf = learn::RetrainCounterfactual(circuit, data, tc);
    unlearn::QmuIConfig q;
    q.fine_tune.seed = DeriveSeed(s, "fine_tune");
    q.fine_tune.loss = model.loss;
    const auto res = unlearn::QmuI(model, data, q);
    const auto probes = data.Rows(data.Indices(learn::Subset::kTest));
    const auto d =
        audit::AuditDistance(*circuit, model.theta, res.model.theta, cf.theta, probes);
    const auto rb = audit::Retention(*circuit, model.theta, model.loss, data);
    const auto ra =
        audit::Retention(*circuit, res.model.theta, model.loss, data, rb);
    const auto mb = audit::MembershipInference(*circuit, model.theta, model.loss, data);
    const auto ma =
        audit::MembershipInference(*circuit, res.model.theta, model.loss, data);
    contracted += d.contracted;
    retained += ra.retained_delta >= -0.1;
    mia += ma.advantage <= mb.advantage;
    before += d.trace_before / 20;
    after += d.trace_after / 20;
  }
  return {contracted >= 18 && retained >= 16 && mia >= 16,
          Fmt("contracted %d/20 (need 18), retained drop <= 0.1 in %d/20 "
              "(need 16), membership advantage not increased %d/20 (need 16); "
              "mean distance %.3f -> %.3f",
              contracted, retained, mia, before, after)};
}

// 7. Reset with partial retraining.
Outcome ResetPartial() {
  const auto circuit = fixture::Ansatz(2, 2, false);
  int frozen_changed = 0;
  double mean_acc = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto data = data::GenerateDataset("two_moons", 100, 0.1, DeriveSeed(s, "dataset"));
    data = data.WithForgetMask(data::ForgetRandom(data, 0.1, DeriveSeed(s, "forget")));
    const auto model = learn::Train(circuit, data, BenchmarkTraining(s));
    const geo::Qfim f = geo::ComputeQfim(*circuit, model.theta,
                                         data.MakeBatch(learn::Subset::kForget),
                                         {geo::QfimMode::kDiagonal, 1});

    learn::TrainConfig ft = unlearn::QmuIConfig::DefaultFineTune();
    ft.seed = DeriveSeed(s, "fine_tune");
    const auto sel = unlearn::FisherRankedSelection(f, 0.5);
    const auto part =
        unlearn::ResetPartial(model, data, sel, DeriveSeed(s, "reset"), ft);
    for (std::size_t i = 0; i < model.theta.size(); ++i) {
      if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
      frozen_changed += std::memcmp(&part.model.theta[i], &model.theta[i],
                                    sizeof(double)) != 0;
    }

    ft.epochs = 0;
    const auto full = unlearn::ResetPartial(model, data,
                                            unlearn::FisherRankedSelection(f, 1.0),
                                            DeriveSeed(s, "reset"), ft);
    mean_acc += audit::Retention(*circuit, full.model.theta, model.loss, data)
                    .retained_accuracy /
                20;
  }
  return {frozen_changed == 0 && std::abs(mean_acc - 0.5) <= 0.15,
          Fmt("frozen coordinates changed %d; full reset without fine-tuning "
              "mean retained accuracy %.3f (need 0.5 +- 0.15)",
              frozen_changed, mean_acc)};
}

// tau on the complement (x) I/2^k on the block, assembled in register order.
qcore::DensityMatrix ProductReference(int n, const std::vector<int>& block,
                                      const qcore::DensityMatrix& tau) {
  std::vector<int> rest;
  for (int q = 0; q < n; ++q) {
    if (std::find(block.begin(), block.end(), q) == block.end()) rest.push_back(q);
  }
  const auto joined =
      qcore::Tensor(tau, qcore::MaximallyMixed(static_cast<int>(block.size())));
  std::vector<int> order(n);
  for (int q = 0; q < n; ++q) {
    const auto r = std::find(rest.begin(), rest.end(), q);
    order[q] = r != rest.end()
                   ? static_cast<int>(r - rest.begin())
                   : static_cast<int>(rest.size()) +
                         static_cast<int>(std::find(block.begin(), block.end(), q) -
                                          block.begin());
  }
  return qcore::PartialTrace(joined, order);
}

// 8. Client-level channel forgetting.
Outcome ClientChannel() {
  int invalid = 0, contraction = 0;
  double marginal = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const int n = 2 + static_cast<int>(s % 3);
    Rng rng(DeriveSeed(s, "block"));
    std::vector<int> qubits = AllQubits(n);
    std::shuffle(qubits.begin(), qubits.end(), rng);
    const std::size_t k = 1 + rng() % (n - 1);
    std::vector<int> block(qubits.begin(), qubits.begin() + k);
    std::vector<int> rest(qubits.begin() + k, qubits.end());
    std::sort(rest.begin(), rest.end());

    const auto rho = qcore::RandomState(n, DeriveSeed(s, "rho"));
    const auto out = unlearn::ClientForget(rho, block);
    try {
      out.Validate();
    } catch (const Error&) {
      ++invalid;
    }
    marginal = std::max(marginal, (qcore::PartialTrace(out, rest).matrix() -
                                   qcore::PartialTrace(rho, rest).matrix())
                                      .cwiseAbs()
                                      .maxCoeff());
    const auto tau = qcore::RandomState(static_cast<int>(rest.size()),
                                        DeriveSeed(s, "tau"));
    const auto ref = ProductReference(n, block, tau);
    contraction += qcore::TraceDistance(out, ref) >
                   qcore::TraceDistance(rho, ref) + 1e-9;
  }
  return {invalid == 0 && marginal <= 1e-9 && contraction == 0,
          Fmt("100 cases, invalid outputs %d, max marginal deviation %.1e, "
              "contraction violations %d",
              invalid, marginal, contraction)};
}

// 9. Secure aggregation over a 5-client, 20-round run.
Outcome SecureAggregation() {
  const auto circuit = fixture::Ansatz(2, 2, false);
  const learn::Dataset data = fixture::MoonsWithCluster(1, 100);
  fed::FedState state =
      fed::InitState(circuit, fed::ShardClients(data, 5, 1.0, 3), 4);
  fed::FedConfig cfg;
  cfg.rounds = 20;
  cfg.seed = 9;
  double worst = 0.0;
  int unmasked = 0;
  for (int r = 0; r < 20; ++r) {
    std::vector<geo::GradVector> updates;
    for (const auto& c : state.clients) {
      updates.push_back(fed::LocalUpdate(c, *circuit, state.theta, data, cfg.loss));
    }
    const auto masks = fed::GenerateMasks(
        5, state.theta.size(), cfg.topology,
        DeriveSeed(cfg.seed, "mask", static_cast<std::uint64_t>(r)));
    const auto agg = fed::SecureAggregate(updates, masks);
    for (std::size_t i = 0; i < updates.size(); ++i) {
      unmasked += agg.masked[i] == updates[i];
    }
    const fed::RoundRecord& rec = fed::FedRound(state, data, cfg);
    for (std::size_t k = 0; k < state.theta.size(); ++k) {
      double plain = 0.0;
      for (const auto& u : updates) plain += u[k];
      worst = std::max(worst, std::abs(rec.aggregate[k] - plain));
    }
  }
  return {worst <= 1e-9 && unmasked == 0,
          Fmt("20 rounds x 5 clients, max |masked sum - plain sum| = %.1e, "
              "messages equal to their update %d",
              worst, unmasked)};
}

// 10. Gaussian calibration, Renyi accounting and clipped sensitivity.
Outcome DpAccounting() {
  const double sigma = privacy::GaussianSigma(1.0, 1.0, 1e-5).sigma;
  const double closed = std::sqrt(2.0 * std::log(1.25 / 1e-5));
  int monotone = 0, naive = 0;
  const std::vector<std::vector<double>> schedules{
      std::vector<double>(50, 1.0), std::vector<double>(50, 4.8448),
      {0.5, 1.0, 2.0, 4.0, 8.0}, {8.0, 4.0, 2.0, 1.0, 0.5},
      {3.0, 0.7, 6.0, 1.1, 2.5, 0.9, 10.0}};
  for (const auto& sched : schedules) {
    privacy::PrivacyLedger l;
    double prev = 0.0;
    for (double s : sched) {
      l.Record(s, 1.0);
      const auto c = l.Compose(1e-5);
      monotone += c.rdp_epsilon < prev;
      naive += c.rdp_epsilon > c.naive_epsilon;
      prev = c.rdp_epsilon;
    }
  }
  // One-client swap: removing any single client's clipped update moves the
  // aggregate by at most C.
  const auto circuit = fixture::Ansatz(2, 2, false);
  const learn::Dataset data = fixture::MoonsWithCluster(2, 100);
  const double clip = 0.1;
  const auto clients = fed::ShardClients(data, 5, clip, 1);
  const auto theta = learn::InitialParams(circuit->n_params(), 5);
  std::vector<geo::GradVector> updates;
  for (const auto& c : clients) {
    updates.push_back(fed::LocalUpdate(c, *circuit, theta, data, {}));
  }
  double sensitivity = 0.0;
  for (std::size_t k = 0; k < updates.size(); ++k) {
    double with = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double full = 0.0, swapped = 0.0;
      for (std::size_t j = 0; j < updates.size(); ++j) {
        full += updates[j][i];
        if (j != k) swapped += updates[j][i];
      }
      with += (full - swapped) * (full - swapped);
    }
    sensitivity = std::max(sensitivity, std::sqrt(with));
  }
  const bool ok = std::abs(sigma - 4.8448) <= 5e-4 &&
                  std::abs(sigma - closed) <= 1e-12 && monotone == 0 &&
                  naive == 0 && sensitivity <= clip * (1 + 1e-12);
  return {ok, Fmt("sigma(1, 1, 1e-5) = %.6f, non-monotone steps %d, "
                  "above naive composition %d, swap sensitivity %.4f <= C = %.2f",
                  sigma, monotone, naive, sensitivity, clip)};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Every CLI experiment twice with the same config and seed.
Outcome Determinism(const std::string& cli, const fs::path& scratch) {
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const std::vector<std::pair<std::string, std::string>> configs{
      {"gen-data", R"({"experiment": "gen-data", "seed": 1})"},
      {"train", R"({"experiment": "train", "seed": 1, "train": {"epochs": 5}})"},
      {"retrain", R"({"experiment": "retrain", "seed": 1, "train": {"epochs": 5}})"},
      {"unlearn", R"({"experiment": "unlearn", "seed": 1, "train": {"epochs": 10}})"},
      {"audit", R"({"experiment": "audit", "seed": 1, "train": {"epochs": 5}})"},
      {"fed", R"({"experiment": "fed", "seed": 1, "dp": {"epsilon": 0.5},
                  "federation": {"rounds": 5, "joint_register": true,
                  "unlearn_events": [{"round": 3, "client": 1}]}})"},
      {"kernel", R"({"experiment": "kernel", "seed": 1})"},
      {"bench", R"({"experiment": "bench", "seed": 1,
                    "bench": {"repeats": 1, "qubits": [2, 3], "kernel_n": 10}})"},
  };
  int mismatched = 0, failed = 0;
  for (const auto& [kind, text] : configs) {
    const fs::path cfg = scratch / (kind + ".json");
    std::ofstream(cfg) << text;
    std::string digest[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = scratch / (kind + "_" + std::to_string(run));
      const std::string cmd = "\"" + cli + "\" " + kind + " --config \"" +
                              cfg.string() + "\" --out \"" + out.string() +
                              "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ++failed;
        continue;
      }
      digest[run] = nlohmann::json::parse(ReadFile(out / "manifest.json"))
                        .at("report_digest")
                        .get<std::string>();
    }
    mismatched += digest[0].empty() || digest[0] != digest[1];
  }
  return {mismatched == 0 && failed == 0,
          Fmt("8 experiments x 2 runs through the CLI, failed runs %d, "
              "digest mismatches %d",
              failed, mismatched)};
}

}  // namespace
}  // namespace qmu

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <qmu-cli> <scratch-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::filesystem::path scratch = argv[2];
  using Check = std::function<qmu::Outcome()>;
  const std::vector<std::pair<const char*, Check>> checks{
      {"data-processing contraction", qmu::DataProcessing},
      {"parameter-shift exactness", qmu::GradientExactness},
      {"QFIM correctness", qmu::QfimCorrectness},
      {"decremental KRR exactness", qmu::SmwExactness},
      {"kernel certificate soundness", qmu::CertificateSoundness},
      {"QMU-I efficacy", qmu::QmuIEfficacy},
      {"reset with partial retraining", qmu::ResetPartial},
      {"client channel forgetting", qmu::ClientChannel},
      {"secure aggregation", qmu::SecureAggregation},
      {"DP accounting", qmu::DpAccounting},
      {"report determinism", [&] { return qmu::Determinism(cli, scratch); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    qmu::Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    std::printf("[%s] %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1,
                checks[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::filesystem::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
