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

#include "qmu/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qmu/common.hpp"
#include "qmu/pqc.hpp"

namespace qmu::audit {
namespace {

constexpr double kRangeTol = 1e-9;

std::vector<double> Losses(const pqc::CircuitTemplate& t,
                           std::span<const double> theta, geo::LossSpec loss,
                           const learn::Dataset& data, learn::Subset s) {
  std::vector<double> out;
  for (std::size_t i : data.Indices(s)) {
    out.push_back(
        geo::Loss(loss, pqc::Predict(t, theta, data.row(i)), data.labels()[i]));
  }
  return out;
}

double FractionAtMost(std::span<const double> v, double t) {
  std::size_t c = 0;
  for (double x : v) c += x <= t ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(v.size());
}

const nlohmann::json& Field(const nlohmann::json& j, const std::string& key,
                            const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    ThrowValidation("report field '" + path + key + "' is missing");
  }
  return j.at(key);
}

double Number(const nlohmann::json& j, const std::string& key,
              const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_number()) {
    ThrowValidation("report field '" + path + key + "' must be a number");
  }
  return v.get<double>();
}

bool Boolean(const nlohmann::json& j, const std::string& key,
             const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_boolean()) {
    ThrowValidation("report field '" + path + key + "' must be a boolean");
  }
  return v.get<bool>();
}

std::string Text(const nlohmann::json& j, const std::string& key,
                 const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_string()) {
    ThrowValidation("report field '" + path + key + "' must be a string");
  }
  return v.get<std::string>();
}

nlohmann::json MembershipJson(const MembershipResult& m) {
  return {{"advantage", m.advantage}, {"auc", m.auc}, {"threshold", m.threshold}};
}

MembershipResult MembershipFrom(const nlohmann::json& j,
                                const std::string& path) {
  return {Number(j, "advantage", path), Number(j, "auc", path),
          Number(j, "threshold", path)};
}

void InRange(double v, double lo, double hi, const char* what) {
  if (!(v >= lo - kRangeTol && v <= hi + kRangeTol)) {
    ThrowInvariant(std::string(what) + " is out of range");
  }
}

// 1 - sqrt(F) <= D <= sqrt(1 - F), with infidelity = 1 - F.
void CheckSandwich(double trace, double infidelity) {
  const double f = std::clamp(1.0 - infidelity, 0.0, 1.0);
  if (trace < 1.0 - std::sqrt(f) - 1e-7 ||
      trace > std::sqrt(1.0 - f) + 1e-7) {
    ThrowInvariant("distances violate the Fuchs-van de Graaf inequalities");
  }
}

void Strip(nlohmann::json& j) {
  if (j.is_object()) {
    j.erase("timestamp");
    j.erase("timings");
    for (auto& [k, v] : j.items()) Strip(v);
  } else if (j.is_array()) {
    for (auto& v : j) Strip(v);
  }
}

}  // namespace

DistanceAudit AuditDistance(const pqc::CircuitTemplate& t,
                            std::span<const double> theta_before,
                            std::span<const double> theta_after,
                            std::span<const double> theta_ref,
                            const Probes& probes, double cert_threshold) {
  Require(cert_threshold >= 0.0, "certificate threshold must be non-negative");
  Require(!probes.empty(), "probe set is empty");
  for (const auto& p : probes) {
    Require(p.size() == t.n_features(),
            "probe width does not match the template's features");
  }
  const pqc::ModelDistance before =
      pqc::CompareModels(t, theta_before, theta_ref, probes);
  const pqc::ModelDistance after =
      pqc::CompareModels(t, theta_after, theta_ref, probes);
  DistanceAudit a;
  a.trace_before = before.trace_distance;
  a.trace_after = after.trace_distance;
  a.infidelity_before = before.infidelity;
  a.infidelity_after = after.infidelity;
  a.contracted = a.trace_after < a.trace_before;
  a.cert_threshold = cert_threshold;
  a.certified = a.trace_after <= cert_threshold;
  return a;
}

double ParamGapBound(const geo::Qfim& f, std::span<const double> g,
                     double lambda) {
  Require(lambda >= 0.0, "damping must be non-negative");
  Require(g.size() == f.size(), "gradient and QFIM sizes differ");
  const double gn = geo::Norm2(g);
  if (gn == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.matrix,
                                                    Eigen::EigenvaluesOnly);
  const double denom = es.eigenvalues().minCoeff() + lambda;
  Require(denom > 0.0, "damped QFIM is singular; increase damping");
  return gn / denom;
}

double ParamGapBound(const learn::TrainedModel& model,
                     const learn::Dataset& data,
                     std::span<const std::size_t> rows, double lambda,
                     geo::QfimSpec spec) {
  Require(!rows.empty(), "parameter-gap target set is empty");
  const geo::GradVector g = geo::ParameterShiftGradient(
      *model.circuit, model.theta, data.MakeBatch(rows), model.loss);
  const geo::Qfim f =
      geo::ComputeQfim(*model.circuit, model.theta,
                       data.MakeBatch(learn::Subset::kTrain), spec);
  return ParamGapBound(f, g, lambda);
}

double LossAuc(std::span<const double> members,
               std::span<const double> holdout) {
  Require(!members.empty() && !holdout.empty(), "AUC needs two non-empty sets");
  double wins = 0.0;
  for (double m : members) {
    for (double h : holdout) {
      wins += m < h ? 1.0 : (m == h ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(members.size() * holdout.size());
}

MembershipResult MembershipInference(std::span<const double> calib_members,
                                     std::span<const double> calib_holdout,
                                     std::span<const double> members,
                                     std::span<const double> holdout) {
  Require(!calib_members.empty(), "membership calibration set D_s is empty");
  Require(!calib_holdout.empty() && !holdout.empty(),
          "membership holdout set is empty");
  Require(!members.empty(), "membership target set D_r is empty");
  std::vector<double> cand(calib_members.begin(), calib_members.end());
  cand.insert(cand.end(), calib_holdout.begin(), calib_holdout.end());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  // Below every score: predict no members.
  double best_t = cand.front() - 1.0;
  double best = 0.0;
  for (double t : cand) {
    const double gap =
        FractionAtMost(calib_members, t) - FractionAtMost(calib_holdout, t);
    if (gap > best) {
      best = gap;
      best_t = t;
    }
  }
  MembershipResult r;
  r.threshold = best_t;
  r.advantage = FractionAtMost(members, best_t) - FractionAtMost(holdout, best_t);
  r.auc = LossAuc(members, holdout);
  return r;
}

MembershipResult MembershipInference(const pqc::CircuitTemplate& t,
                                     std::span<const double> theta,
                                     geo::LossSpec loss,
                                     const learn::Dataset& data) {
  const auto retained = Losses(t, theta, loss, data, learn::Subset::kRetained);
  const auto holdout = Losses(t, theta, loss, data, learn::Subset::kTest);
  const auto forget = Losses(t, theta, loss, data, learn::Subset::kForget);
  return MembershipInference(retained, holdout, forget, holdout);
}

double ForgettingCurve::Flatness(std::size_t k) const {
  Require(!distance.empty(), "forgetting curve is empty");
  k = std::min(std::max<std::size_t>(k, 1), distance.size());
  const auto first = distance.end() - static_cast<std::ptrdiff_t>(k);
  const auto [lo, hi] = std::minmax_element(first, distance.end());
  return *hi - *lo;
}

std::string ForgettingCurve::ToCsv() const {
  std::string out = "iteration,trace_distance\n";
  char buf[64];
  for (std::size_t i = 0; i < iteration.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", iteration[i], distance[i]);
    out += buf;
  }
  return out;
}

ForgettingCurve BuildForgettingCurve(const unlearn::UnlearnTrace& trace,
                                     const pqc::CircuitTemplate& t,
                                     std::span<const double> theta_ref,
                                     const Probes& probes) {
  Require(!trace.snapshots.empty(), "unlearn trace is empty");
  ForgettingCurve c;
  for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
    c.iteration.push_back(static_cast<int>(i));
    c.distance.push_back(
        pqc::CompareModels(t, trace.snapshots[i], theta_ref, probes)
            .trace_distance);
  }
  return c;
}

RetentionMetrics Retention(const pqc::CircuitTemplate& t,
                           std::span<const double> theta, geo::LossSpec loss,
                           const learn::Dataset& data,
                           const std::optional<RetentionMetrics>& before) {
  auto acc = [&](learn::Subset s, const char* name) {
    const auto rows = data.Indices(s);
    Require(!rows.empty(), std::string("split '") + name + "' is empty");
    return learn::Evaluate(t, theta, loss, data, rows).accuracy;
  };
  RetentionMetrics m;
  m.retained_accuracy = acc(learn::Subset::kRetained, "retained");
  m.forget_accuracy = acc(learn::Subset::kForget, "forget");
  m.test_accuracy = acc(learn::Subset::kTest, "test");
  if (before) {
    m.retained_delta = m.retained_accuracy - before->retained_accuracy;
    m.forget_delta = m.forget_accuracy - before->forget_accuracy;
  }
  return m;
}

void UnlearnReport::Validate() const {
  Require(!mechanism.empty(), "report field 'mechanism' is empty");
  InRange(distance.trace_before, 0, 1, "trace distance before");
  InRange(distance.trace_after, 0, 1, "trace distance after");
  InRange(distance.infidelity_before, 0, 1, "infidelity before");
  InRange(distance.infidelity_after, 0, 1, "infidelity after");
  CheckSandwich(distance.trace_before, distance.infidelity_before);
  CheckSandwich(distance.trace_after, distance.infidelity_after);
  for (const MembershipResult* m : {&membership_before, &membership_after}) {
    InRange(m->advantage, -1, 1, "membership advantage");
    InRange(m->auc, 0, 1, "membership AUC");
  }
  if (kernel_alignment) InRange(*kernel_alignment, 0, 1, "kernel alignment");
  if (kernel_mmd && *kernel_mmd < 0.0) ThrowInvariant("kernel MMD is negative");
  if (param_gap_bound < 0.0) ThrowInvariant("parameter-gap bound is negative");
}

nlohmann::json UnlearnReport::ToJson() const {
  using nlohmann::json;
  json j;
  j["mechanism"] = mechanism;
  j["distance"] = {{"trace_before", distance.trace_before},
                   {"trace_after", distance.trace_after},
                   {"infidelity_before", distance.infidelity_before},
                   {"infidelity_after", distance.infidelity_after},
                   {"contracted", distance.contracted},
                   {"cert_threshold", distance.cert_threshold},
                   {"certified", distance.certified}};
  j["param_gap_bound"] = {{"value", param_gap_bound}, {"kind", "heuristic"}};
  j["membership"] = {{"before", MembershipJson(membership_before)},
                     {"after", MembershipJson(membership_after)}};
  j["retention"] = {{"retained_accuracy", retention.retained_accuracy},
                    {"forget_accuracy", retention.forget_accuracy},
                    {"test_accuracy", retention.test_accuracy},
                    {"retained_delta", retention.retained_delta},
                    {"forget_delta", retention.forget_delta}};
  if (kernel_alignment || kernel_mmd) {
    json k = json::object();
    if (kernel_alignment) k["alignment"] = *kernel_alignment;
    if (kernel_mmd) k["mmd"] = *kernel_mmd;
    j["kernel"] = k;
  }
  j["dp_ledger"] = dp_ledger;
  j["reproducibility"] = {{"seeds", seeds},
                          {"n_qubits", n_qubits},
                          {"depth", depth},
                          {"probe_digest", probe_digest},
                          {"backend", "dense_simulator"}};
  j["timestamp"] = timestamp;
  return j;
}

UnlearnReport UnlearnReport::FromJson(const nlohmann::json& j) {
  UnlearnReport r;
  r.mechanism = Text(j, "mechanism", "");
  const auto& d = Field(j, "distance", "");
  r.distance.trace_before = Number(d, "trace_before", "distance.");
  r.distance.trace_after = Number(d, "trace_after", "distance.");
  r.distance.infidelity_before = Number(d, "infidelity_before", "distance.");
  r.distance.infidelity_after = Number(d, "infidelity_after", "distance.");
  r.distance.contracted = Boolean(d, "contracted", "distance.");
  r.distance.cert_threshold = Number(d, "cert_threshold", "distance.");
  r.distance.certified = Boolean(d, "certified", "distance.");
  r.param_gap_bound =
      Number(Field(j, "param_gap_bound", ""), "value", "param_gap_bound.");
  const auto& m = Field(j, "membership", "");
  r.membership_before =
      MembershipFrom(Field(m, "before", "membership."), "membership.before.");
  r.membership_after =
      MembershipFrom(Field(m, "after", "membership."), "membership.after.");
  const auto& ret = Field(j, "retention", "");
  r.retention.retained_accuracy =
      Number(ret, "retained_accuracy", "retention.");
  r.retention.forget_accuracy = Number(ret, "forget_accuracy", "retention.");
  r.retention.test_accuracy = Number(ret, "test_accuracy", "retention.");
  r.retention.retained_delta = Number(ret, "retained_delta", "retention.");
  r.retention.forget_delta = Number(ret, "forget_delta", "retention.");
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (k.contains("alignment")) r.kernel_alignment = Number(k, "alignment", "kernel.");
    if (k.contains("mmd")) r.kernel_mmd = Number(k, "mmd", "kernel.");
  }
  r.dp_ledger = Field(j, "dp_ledger", "");
  const auto& rep = Field(j, "reproducibility", "");
  const auto& seeds = Field(rep, "seeds", "reproducibility.");
  if (!seeds.is_object()) {
    ThrowValidation("report field 'reproducibility.seeds' must be an object");
  }
  for (const auto& [k, v] : seeds.items()) {
    if (!v.is_number_unsigned()) {
      ThrowValidation("report field 'reproducibility.seeds." + k +
                      "' must be an unsigned integer");
    }
    r.seeds[k] = v.get<std::uint64_t>();
  }
  r.n_qubits = static_cast<int>(Number(rep, "n_qubits", "reproducibility."));
  r.depth = static_cast<int>(Number(rep, "depth", "reproducibility."));
  r.probe_digest = Text(rep, "probe_digest", "reproducibility.");
  r.timestamp = Text(j, "timestamp", "");
  r.Validate();
  return r;
}

std::string ProbeDigest(const Probes& probes) {
  std::string text;
  char buf[32];
  for (const auto& p : probes) {
    for (double v : p) {
      std::snprintf(buf, sizeof(buf), "%.17g,", v);
      text += buf;
    }
    text += '\n';
  }
  return Sha256Hex(text);
}

std::string CanonicalDump(const nlohmann::json& report) {
  return report.dump(2) + "\n";
}

std::string ReportDigest(const nlohmann::json& report) {
  nlohmann::json copy = report;
  Strip(copy);
  return Sha256Hex(copy.dump());
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowIo("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) ThrowIo("failed writing '" + path.string() + "'");
}

void EmitReport(const nlohmann::json& report,
                const std::filesystem::path& path) {
  WriteText(path, CanonicalDump(report));
}

nlohmann::json ReadReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowIo("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    ThrowValidation("report '" + path.string() + "' is not valid JSON: " +
                    e.what());
  }
}

}  // namespace qmu::audit
