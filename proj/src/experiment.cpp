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

#include "qmu/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "qmu/audit.hpp"
#include "qmu/common.hpp"
#include "qmu/datasets.hpp"
#include "qmu/geo.hpp"
#include "qmu/qkernel.hpp"

namespace qmu::experiment {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Documents built in code hold signed integers; parsed ones unsigned.
bool IsCount(const json& v) {
  return v.is_number_unsigned() ||
         (v.is_number_integer() && v.get<long long>() >= 0);
}

// Strict view of one config object: every key must be read or the
// finishing check names the stray one.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) {
      ThrowValidation("config field '" + Display() + "' must be an object");
    }
  }

  bool Has(const std::string& key) const { return j_->contains(key); }

  double Num(const std::string& key, double def) {
    if (!Take(key)) return def;
    const json& v = j_->at(key);
    if (v.is_string() && (v == "inf" || v == "infinity")) return kInf;
    if (!v.is_number()) Bad(key, "must be a number");
    return v.get<double>();
  }

  std::optional<double> OptNum(const std::string& key) {
    if (!Has(key) || j_->at(key).is_null()) {
      Take(key);
      return std::nullopt;
    }
    return Num(key, 0.0);
  }

  long long Int(const std::string& key, long long def) {
    if (!Take(key)) return def;
    const json& v = j_->at(key);
    if (!v.is_number_integer()) Bad(key, "must be an integer");
    return v.get<long long>();
  }

  std::size_t Count(const std::string& key, std::size_t def) {
    const long long v = Int(key, static_cast<long long>(def));
    if (v < 0) Bad(key, "must be non-negative");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t U64(const std::string& key) {
    Take(key);
    const json& v = j_->at(key);
    if (!IsCount(v)) Bad(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool Bool(const std::string& key, bool def) {
    if (!Take(key)) return def;
    const json& v = j_->at(key);
    if (!v.is_boolean()) Bad(key, "must be true or false");
    return v.get<bool>();
  }

  std::string Str(const std::string& key, const std::string& def) {
    if (!Take(key)) return def;
    const json& v = j_->at(key);
    if (!v.is_string()) Bad(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> NumList(const std::string& key) {
    Take(key);
    const json& v = j_->at(key);
    if (!v.is_array()) Bad(key, "must be a list of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) Bad(key, "must be a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> CountList(const std::string& key) {
    Take(key);
    const json& v = j_->at(key);
    if (!v.is_array()) Bad(key, "must be a list of non-negative integers");
    std::vector<std::size_t> out;
    for (const json& e : v) {
      if (!IsCount(e)) {
        Bad(key, "must be a list of non-negative integers");
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::optional<Obj> Child(const std::string& key) {
    if (!Take(key)) return std::nullopt;
    return Obj(j_->at(key), Join(key));
  }

  const json& Raw(const std::string& key) {
    Take(key);
    return j_->at(key);
  }

  std::string Join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] void Bad(const std::string& key, const std::string& what) const {
    ThrowValidation("config field '" + Join(key) + "' " + what);
  }

  void Finish() const {
    for (const auto& [k, v] : j_->items()) {
      if (used_.count(k) == 0) {
        ThrowValidation("unknown config field '" + Join(k) + "'");
      }
    }
  }

 private:
  bool Take(const std::string& key) {
    if (!j_->contains(key)) return false;
    used_.insert(key);
    return true;
  }
  std::string Display() const { return path_.empty() ? "<root>" : path_; }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

learn::Optimizer ParseOptimizer(Obj& o) {
  const std::string s = o.Str("optimizer", "gd");
  if (s == "gd") return learn::Optimizer::kGd;
  if (s == "natural") return learn::Optimizer::kNatural;
  o.Bad("optimizer", "must be 'gd' or 'natural'");
}

geo::QfimMode ParseQfimMode(Obj& o, const std::string& key,
                            geo::QfimMode def) {
  if (!o.Has(key)) return def;
  const std::string s = o.Str(key, "");
  if (s == "full") return geo::QfimMode::kFull;
  if (s == "block") return geo::QfimMode::kBlock;
  if (s == "diagonal") return geo::QfimMode::kDiagonal;
  o.Bad(key, "must be 'full', 'block' or 'diagonal'");
}

const char* QfimModeName(geo::QfimMode m) {
  switch (m) {
    case geo::QfimMode::kFull:
      return "full";
    case geo::QfimMode::kBlock:
      return "block";
    case geo::QfimMode::kDiagonal:
      return "diagonal";
  }
  return "?";
}

learn::TrainConfig ParseTrain(Obj o, learn::TrainConfig c) {
  c.learning_rate = o.Num("learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(o.Int("epochs", c.epochs));
  c.batch_size = o.Count("batch_size", c.batch_size);
  if (o.Has("optimizer")) c.optimizer = ParseOptimizer(o);
  c.damping = o.Num("damping", c.damping);
  c.qfim.mode = ParseQfimMode(o, "qfim", c.qfim.mode);
  c.qfim.block_size = o.Count("block_size", c.qfim.block_size);
  c.patience = static_cast<int>(o.Int("patience", c.patience));
  const std::string loss = o.Str("loss", c.loss.kind == geo::LossKind::kMse
                                             ? "mse"
                                             : "logistic");
  if (loss == "mse") {
    c.loss.kind = geo::LossKind::kMse;
  } else if (loss == "logistic") {
    c.loss.kind = geo::LossKind::kLogistic;
  } else {
    o.Bad("loss", "must be 'mse' or 'logistic'");
  }
  o.Finish();
  if (!(c.learning_rate > 0.0)) o.Bad("learning_rate", "must be positive");
  if (c.epochs < 0) o.Bad("epochs", "must be non-negative");
  if (c.batch_size < 1) o.Bad("batch_size", "must be at least 1");
  if (c.damping < 0.0) o.Bad("damping", "must be non-negative");
  if (c.patience < 0) o.Bad("patience", "must be non-negative");
  return c;
}

json TrainJson(const learn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"optimizer", c.optimizer == learn::Optimizer::kGd ? "gd" : "natural"},
          {"damping", c.damping},
          {"qfim", QfimModeName(c.qfim.mode)},
          {"block_size", c.qfim.block_size},
          {"patience", c.patience},
          {"loss", c.loss.kind == geo::LossKind::kMse ? "mse" : "logistic"}};
}

unlearn::Metric ParseMetric(Obj& o) {
  const std::string s = o.Str("metric", "diagonal");
  if (s == "full") return unlearn::Metric::kFull;
  if (s == "block") return unlearn::Metric::kBlock;
  if (s == "diagonal") return unlearn::Metric::kDiagonal;
  if (s == "identity") return unlearn::Metric::kIdentity;
  o.Bad("metric", "must be 'full', 'block', 'diagonal' or 'identity'");
}

fed::UnlearnMode ParseMode(Obj& o) {
  const std::string s = o.Str("mode", "gradient_subtract");
  if (s == "gradient_subtract") return fed::UnlearnMode::kGradientSubtract;
  if (s == "channel") return fed::UnlearnMode::kChannel;
  o.Bad("mode", "must be 'gradient_subtract' or 'channel'");
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string Timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json MetricsJson(const learn::Metrics& m) {
  return {{"loss", m.loss}, {"accuracy", m.accuracy}, {"count", m.count}};
}

// Collects artifacts and consumed seeds while an experiment runs.
class Session {
 public:
  Session(const RunConfig& cfg) : cfg_(cfg), master_(*cfg.seed) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec || !fs::is_directory(cfg.out_dir)) {
      ThrowIo("cannot create output directory '" + cfg.out_dir.string() + "'");
    }
    seeds_["master"] = master_;
  }

  std::uint64_t Seed(const std::string& tag) {
    const std::uint64_t s = DeriveSeed(master_, tag);
    seeds_[tag] = s;
    return s;
  }
  const std::map<std::string, std::uint64_t>& seeds() const { return seeds_; }

  void Write(const std::string& name, const std::string& text) {
    audit::WriteText(cfg_.out_dir / name, text);
    artifacts_[name] = Sha256Hex(text);
  }

  learn::Dataset LoadData() {
    const DatasetSource& src = cfg_.dataset;
    learn::Dataset data =
        src.path ? data::LoadCsv(*src.path, Seed("split"))
                 : data::GenerateDataset(src.generator, src.n, src.noise,
                                         Seed("dataset"));
    const ForgetSpec& f = cfg_.forget;
    std::vector<bool> mask;
    if (f.kind == "none") {
      mask.assign(data.size(), false);
    } else if (f.kind == "cluster") {
      mask = data::ForgetCluster(data, f.label, f.size);
    } else if (f.kind == "class") {
      mask = data::ForgetClass(data, f.label);
    } else if (f.kind == "random") {
      mask = data::ForgetRandom(data, f.fraction, Seed("forget"));
    } else if (f.kind == "rows") {
      mask = data::ForgetRows(data, f.rows);
    } else {
      return data;  // "mask"
    }
    return data.WithForgetMask(std::move(mask));
  }

  std::shared_ptr<const pqc::CircuitTemplate> Circuit(
      const learn::Dataset& data) const {
    pqc::AnsatzOptions o;
    o.n_qubits = cfg_.circuit.n_qubits;
    o.depth = cfg_.circuit.depth;
    o.entangler = cfg_.circuit.entangler;
    o.reupload = cfg_.circuit.reupload;
    o.n_features = data.n_features();
    o.data_scale = cfg_.circuit.data_scale;
    o.noise = cfg_.circuit.noise;
    return std::make_shared<const pqc::CircuitTemplate>(
        pqc::BuildLayeredAnsatz(o));
  }

  RunResult Finish(json report) {
    report["experiment"] = KindName(cfg_.kind);
    report["config"] = cfg_.ToJson();
    report["timestamp"] = Timestamp();
    RunResult r;
    r.digest = audit::ReportDigest(report);
    Write("report.json", audit::CanonicalDump(report));
    json manifest = {{"experiment", KindName(cfg_.kind)},
                     {"seeds", seeds_},
                     {"artifacts", artifacts_},
                     {"report_digest", r.digest},
                     {"timestamp", report["timestamp"]}};
    audit::WriteText(cfg_.out_dir / "manifest.json",
                     audit::CanonicalDump(manifest));
    r.report = std::move(report);
    r.artifacts = artifacts_;
    r.out_dir = cfg_.out_dir;
    return r;
  }

 private:
  const RunConfig& cfg_;
  std::uint64_t master_;
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::string> artifacts_;
};

json DatasetJson(const learn::Dataset& data, const std::string& csv) {
  return {{"rows", data.size()},
          {"features", data.n_features()},
          {"train", data.Indices(learn::Subset::kTrain).size()},
          {"test", data.Indices(learn::Subset::kTest).size()},
          {"forget", data.Indices(learn::Subset::kForget).size()},
          {"digest", Sha256Hex(csv)}};
}

learn::Dataset StageData(Session& s, json& report) {
  learn::Dataset data = s.LoadData();
  const std::string csv = data::ToCsv(data);
  s.Write("dataset.csv", csv);
  report["dataset"] = DatasetJson(data, csv);
  return data;
}

audit::Probes ProbeSet(const learn::Dataset& data) {
  auto rows = data.Indices(learn::Subset::kTest);
  if (rows.empty()) rows = data.Indices(learn::Subset::kRetained);
  return data.Rows(rows);
}

RunResult RunGenData(const RunConfig& cfg) {
  Session s(cfg);
  json report;
  StageData(s, report);
  return s.Finish(std::move(report));
}

RunResult RunTrain(const RunConfig& cfg, bool counterfactual) {
  Session s(cfg);
  json report;
  const learn::Dataset data = StageData(s, report);
  const auto circuit = s.Circuit(data);
  learn::TrainConfig tc = cfg.train;
  tc.seed = s.Seed("train");
  const learn::TrainedModel m = counterfactual
                                    ? learn::RetrainCounterfactual(circuit, data, tc)
                                    : learn::Train(circuit, data, tc);
  report["template"] = pqc::TemplateToJson(*circuit);
  report["model"] = {{"theta", m.theta}, {"loss_trace", m.loss_trace}};
  json metrics = {{"train", MetricsJson(learn::Evaluate(m, data, learn::Subset::kTrain))}};
  for (auto [name, sub] : {std::pair{"test", learn::Subset::kTest},
                           std::pair{"retained", learn::Subset::kRetained},
                           std::pair{"forget", learn::Subset::kForget}}) {
    if (!data.Indices(sub).empty()) {
      metrics[name] = MetricsJson(learn::Evaluate(m, data, sub));
    }
  }
  report["metrics"] = metrics;
  return s.Finish(std::move(report));
}

// Runs the configured mechanism from `model`; the trace starts at model.theta.
unlearn::UnlearnResult ApplyMechanism(Session& s, const RunConfig& cfg,
                                      const learn::TrainedModel& model,
                                      const learn::Dataset& data) {
  const MechanismSpec& ms = cfg.mechanism;
  const auto forget = data.Indices(learn::Subset::kForget);
  unlearn::UnlearnResult r;
  if (ms.name == "qmu_i") {
    unlearn::QmuIConfig q = ms.qmu;
    q.fine_tune.seed = s.Seed("fine_tune");
    q.fine_tune.loss = model.loss;
    return unlearn::QmuI(model, data, q);
  }
  if (ms.name == "reset_partial") {
    Require(!forget.empty(), "forget set D_r is empty");
    const geo::Qfim f = geo::ComputeQfim(*model.circuit, model.theta,
                                         data.MakeBatch(forget),
                                         {geo::QfimMode::kDiagonal, 1});
    learn::TrainConfig ft = ms.qmu.fine_tune;
    ft.seed = s.Seed("fine_tune");
    ft.loss = model.loss;
    return unlearn::ResetPartial(model, data,
                                 unlearn::FisherRankedSelection(f, ms.fraction),
                                 s.Seed("reset"), ft);
  }
  r.model = model;
  r.trace.mechanism = ms.name;
  r.trace.snapshots.push_back(model.theta);
  if (ms.name == "influence") {
    const geo::GradVector d =
        unlearn::InfluenceDelta(model, data, forget, ms.damping);
    for (std::size_t i = 0; i < d.size(); ++i) r.model.theta[i] += d[i];
  } else if (ms.name == "fisher_step") {
    r.model.theta =
        unlearn::FisherStep(model, data, forget, ms.step, ms.damping);
  } else {
    return r;  // none
  }
  r.trace.snapshots.push_back(r.model.theta);
  r.trace.unlearn_steps = 1;
  return r;
}

pqc::ParamVector AuditTarget(const RunConfig& cfg,
                             const learn::TrainedModel& model) {
  if (cfg.audit.theta) return *cfg.audit.theta;
  if (cfg.audit.report) {
    const json prior = audit::ReadReport(*cfg.audit.report);
    const json* node = &prior;
    for (const char* key : {"models", "unlearned"}) {
      if (!node->contains(key)) {
        ThrowValidation("audit.report has no 'models.unlearned' entry");
      }
      node = &node->at(key);
    }
    return node->get<pqc::ParamVector>();
  }
  return model.theta;
}

RunResult RunUnlearn(const RunConfig& cfg, bool audit_only) {
  Session s(cfg);
  json extra;
  const learn::Dataset data = StageData(s, extra);
  const auto circuit = s.Circuit(data);
  learn::TrainConfig tc = cfg.train;
  tc.seed = s.Seed("train");
  const learn::TrainedModel model = learn::Train(circuit, data, tc);
  const learn::TrainedModel cf = learn::RetrainCounterfactual(circuit, data, tc);
  const audit::Probes probes = ProbeSet(data);

  unlearn::UnlearnResult res;
  if (audit_only) {
    res.model = model;
    res.model.theta = AuditTarget(cfg, model);
    Require(res.model.theta.size() == model.theta.size(),
            "audit.theta has the wrong number of parameters");
    res.trace.mechanism = "audit";
    res.trace.snapshots = {model.theta, res.model.theta};
  } else {
    res = ApplyMechanism(s, cfg, model, data);
  }

  audit::UnlearnReport rep;
  rep.mechanism = res.trace.mechanism;
  rep.distance = audit::AuditDistance(*circuit, model.theta, res.model.theta,
                                      cf.theta, probes,
                                      cfg.mechanism.cert_threshold);
  const auto forget = data.Indices(learn::Subset::kForget);
  rep.param_gap_bound = audit::ParamGapBound(res.model, data, forget,
                                             cfg.mechanism.damping);
  rep.membership_before =
      audit::MembershipInference(*circuit, model.theta, model.loss, data);
  rep.membership_after =
      audit::MembershipInference(*circuit, res.model.theta, model.loss, data);
  const audit::RetentionMetrics before =
      audit::Retention(*circuit, model.theta, model.loss, data);
  rep.retention =
      audit::Retention(*circuit, res.model.theta, model.loss, data, before);
  rep.dp_ledger = nullptr;
  rep.seeds = s.seeds();
  rep.n_qubits = circuit->n_qubits();
  rep.depth = cfg.circuit.depth;
  rep.probe_digest = audit::ProbeDigest(probes);
  rep.Validate();

  const audit::ForgettingCurve curve =
      audit::BuildForgettingCurve(res.trace, *circuit, cf.theta, probes);
  s.Write("forgetting_curve.csv", curve.ToCsv());

  json report = rep.ToJson();
  report["dataset"] = extra["dataset"];
  report["models"] = {{"original", model.theta},
                      {"unlearned", res.model.theta},
                      {"counterfactual", cf.theta}};
  report["forgetting_curve"] = {
      {"points", curve.distance.size()},
      {"initial", curve.distance.front()},
      {"final", curve.distance.back()},
      {"flatness_last5", curve.Flatness(5)}};
  report["unlearn_steps"] = res.trace.unlearn_steps;
  report["reproducibility"]["seeds"] = s.seeds();
  return s.Finish(std::move(report));
}

std::string LedgerCsv(const fed::FedState& st, const privacy::PrivacyLedger& l) {
  std::string out =
      "round,sigma,clip_norm,epsilon,naive_epsilon,mask_residual,masked_digest\n";
  char buf[256];
  for (std::size_t i = 0; i < st.history.size(); ++i) {
    const fed::RoundRecord& r = st.history[i];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,", r.round,
                  r.sigma, l.rounds()[i].clip_norm, r.epsilon, r.naive_epsilon,
                  r.mask_residual);
    out += buf;
    out += r.masked_digest + "\n";
  }
  return out;
}

RunResult RunFed(const RunConfig& cfg) {
  Session s(cfg);
  json report;
  const learn::Dataset data = StageData(s, report);
  const auto circuit = s.Circuit(data);
  fed::SimulationConfig sc = cfg.fed;
  sc.fed.seed = s.Seed("fed");
  sc.fed.loss = cfg.train.loss;
  if (cfg.dp) {
    sc.fed.dp = *cfg.dp;
    sc.fed.dp_enabled = true;
  }
  const fed::SimulationResult sim = fed::RunSimulation(circuit, data, sc);
  report["federation"] = sim.ToJson();
  report["ledger"] = sim.state.ledger.ToJson(sc.fed.dp.delta);
  if (!data.Indices(learn::Subset::kTest).empty()) {
    report["metrics"] = {
        {"test", MetricsJson(learn::Evaluate(*circuit, sim.state.theta,
                                             sc.fed.loss, data,
                                             data.Indices(learn::Subset::kTest)))}};
  }
  s.Write("ledger.csv", LedgerCsv(sim.state, sim.state.ledger));
  return s.Finish(std::move(report));
}

RunResult RunKernel(const RunConfig& cfg) {
  Session s(cfg);
  json report;
  const learn::Dataset data = StageData(s, report);
  pqc::AnsatzOptions o;
  o.n_qubits = cfg.kernel.n_qubits;
  o.depth = cfg.kernel.depth;
  o.n_features = data.n_features();
  const qkernel::FeatureMap fm = qkernel::MakeFeatureMap(o, s.Seed("kernel"));

  const auto train = data.Indices(learn::Subset::kTrain);
  const auto forget = data.Indices(learn::Subset::kForget);
  const auto retained = data.Indices(learn::Subset::kRetained);
  Require(!train.empty(), "kernel experiment needs train rows");
  const qkernel::GramMatrix k = qkernel::Gram(fm, data.Rows(train), train);
  s.Write("gram.csv", qkernel::GramToCsv(k));
  Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = data.labels()[train[i]];
  }
  const qkernel::KernelRidgeModel model = qkernel::KrrFit(k, y, cfg.kernel.lambda);
  const qkernel::KernelRidgeModel after = qkernel::DeleteSamplesSmw(model, forget);

  // Direct refit on the retained rows, the oracle for the decremental path.
  const qkernel::GramMatrix k_s =
      qkernel::Gram(fm, data.Rows(retained), retained);
  Eigen::VectorXd y_s(static_cast<Eigen::Index>(retained.size()));
  for (std::size_t i = 0; i < retained.size(); ++i) {
    y_s(static_cast<Eigen::Index>(i)) = data.labels()[retained[i]];
  }
  const qkernel::KernelRidgeModel direct =
      qkernel::KrrFit(k_s, y_s, cfg.kernel.lambda);
  const double smw_error = (after.alpha - direct.alpha).cwiseAbs().maxCoeff();

  auto test = data.Indices(learn::Subset::kTest);
  if (test.empty()) test = train;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!data.forget_mask()[train[i]]) keep.push_back(static_cast<Eigen::Index>(i));
  }
  double max_dev = 0.0, max_bound = 0.0;
  int violations = 0, correct_before = 0, correct_after = 0;
  for (std::size_t i : test) {
    const Eigen::VectorXd kx = qkernel::KernelVector(fm, data.Rows(train), data.row(i));
    const Eigen::VectorXd ks = kx(keep);
    const double f_after = ks.dot(after.alpha);
    const double f_s = ks.dot(model.alpha(keep));
    const double bound = forget.empty() ? 0.0
                                        : qkernel::DeviationBound(model, forget, kx);
    const double dev = std::abs(f_after - f_s);
    max_dev = std::max(max_dev, dev);
    max_bound = std::max(max_bound, bound);
    violations += dev > bound + 1e-12 ? 1 : 0;
    correct_before += learn::SignLabel(qkernel::KrrPredict(model, kx)) ==
                      data.labels()[i];
    correct_after += learn::SignLabel(f_after) == data.labels()[i];
  }
  const Eigen::MatrixXd ideal = y * y.transpose();
  std::vector<std::size_t> pos_forget, pos_keep;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (data.forget_mask()[train[i]] ? pos_forget : pos_keep).push_back(i);
  }
  json kernel = {
      {"n", train.size()},
      {"deleted", forget.size()},
      {"lambda", cfg.kernel.lambda},
      {"smw_max_abs_error", smw_error},
      {"bound", {{"kind", "implemented bound"},
                 {"max_bound", max_bound},
                 {"max_deviation", max_dev},
                 {"violations", violations}}},
      {"test_accuracy_before",
       static_cast<double>(correct_before) / static_cast<double>(test.size())},
      {"test_accuracy_after",
       static_cast<double>(correct_after) / static_cast<double>(test.size())},
      {"alignment_before", qkernel::Alignment(k.matrix, ideal)},
      {"alignment_after",
       qkernel::Alignment(k_s.matrix, y_s * y_s.transpose())},
      {"alpha_after", std::vector<double>(after.alpha.begin(), after.alpha.end())}};
  if (!pos_forget.empty() && !pos_keep.empty()) {
    kernel["mmd_forget_vs_retained"] = qkernel::Mmd(k.matrix, pos_forget, pos_keep);
  }
  report["kernel"] = kernel;
  return s.Finish(std::move(report));
}

RunResult RunBench(const RunConfig& cfg) {
  Session s(cfg);
  json report;
  const BenchSpec& b = cfg.bench;
  Require(b.repeats >= 1, "bench.repeats must be at least 1");
  Require(!b.qubits.empty(), "bench.qubits is empty");
  Rng rng(s.Seed("bench"));
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  json ops = json::array();
  json timings = json::array();
  std::string table = "op,n_qubits,n_params,repeats,mean_seconds\n";
  auto time_op = [&](const std::string& op, int q, std::size_t p,
                     const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < b.repeats; ++r) fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count() / b.repeats;
    ops.push_back({{"op", op}, {"n_qubits", q}, {"n_params", p}});
    timings.push_back({{"op", op}, {"n_qubits", q}, {"mean_seconds", secs}});
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%d,%.9g\n", op.c_str(), q, p,
                  b.repeats, secs);
    table += buf;
  };
  for (int q : b.qubits) {
    Require(q >= 1 && q <= qcore::kMaxQubits, "bench.qubits entry out of range");
    const pqc::CircuitTemplate t =
        pqc::BuildLayeredAnsatz(q, b.depth, pqc::Entangler::kLinear, true);
    const pqc::ParamVector theta = learn::InitialParams(t.n_params(), rng());
    std::vector<std::vector<double>> xs(8, std::vector<double>(
                                               static_cast<std::size_t>(q)));
    for (auto& x : xs) {
      for (double& v : x) v = unif(rng);
    }
    geo::Batch batch;
    for (const auto& x : xs) batch.Add(x, 1);
    time_op("parameter_shift_gradient", q, t.n_params(), [&] {
      geo::ParameterShiftGradient(t, theta, batch, {});
    });
    time_op("qfim_full", q, t.n_params(), [&] {
      geo::ComputeQfim(t, theta, batch, {geo::QfimMode::kFull, 1});
    });
    pqc::AnsatzOptions ko;
    ko.n_qubits = q;
    ko.depth = 1;
    const qkernel::FeatureMap fm = qkernel::MakeFeatureMap(ko, rng());
    std::vector<std::vector<double>> pts(b.kernel_n,
                                         std::vector<double>(static_cast<std::size_t>(q)));
    for (auto& x : pts) {
      for (double& v : x) v = unif(rng);
    }
    const qkernel::GramMatrix k = qkernel::Gram(fm, pts);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(k.matrix.rows());
    const qkernel::KernelRidgeModel m = qkernel::KrrFit(k, y, 0.1);
    const std::vector<std::size_t> del{0, 1, 2};
    time_op("smw_delete_3", q, b.kernel_n, [&] {
      qkernel::DeleteSamplesSmw(m, del);
    });
  }
  s.Write("timing.csv", table);
  report["ops"] = ops;
  report["timings"] = timings;
  return s.Finish(std::move(report));
}

}  // namespace

Kind ParseKind(std::string_view name) {
  static const std::pair<const char*, Kind> kKinds[] = {
      {"gen-data", Kind::kGenData}, {"train", Kind::kTrain},
      {"unlearn", Kind::kUnlearn},  {"retrain", Kind::kRetrain},
      {"audit", Kind::kAudit},      {"fed", Kind::kFed},
      {"kernel", Kind::kKernel},    {"bench", Kind::kBench}};
  for (const auto& [n, k] : kKinds) {
    if (name == n) return k;
  }
  ThrowValidation("unknown experiment '" + std::string(name) + "'");
}

const char* KindName(Kind k) {
  switch (k) {
    case Kind::kGenData:
      return "gen-data";
    case Kind::kTrain:
      return "train";
    case Kind::kUnlearn:
      return "unlearn";
    case Kind::kRetrain:
      return "retrain";
    case Kind::kAudit:
      return "audit";
    case Kind::kFed:
      return "fed";
    case Kind::kKernel:
      return "kernel";
    case Kind::kBench:
      return "bench";
  }
  return "?";
}

RunConfig RunConfig::FromJson(const json& j, const fs::path& base_dir) {
  RunConfig c;
  Obj root(j, "");
  c.kind = ParseKind(root.Str("experiment", "train"));
  if (root.Has("seed")) c.seed = root.U64("seed");
  if (root.Has("output_dir")) {
    c.out_dir = Resolve(base_dir, root.Str("output_dir", ""));
  }

  if (auto d = root.Child("dataset")) {
    if (d->Has("path")) c.dataset.path = Resolve(base_dir, d->Str("path", ""));
    c.dataset.generator = d->Str("generator", c.dataset.generator);
    c.dataset.n = d->Count("n", c.dataset.n);
    c.dataset.noise = d->Num("noise", c.dataset.noise);
    d->Finish();
    if (c.dataset.path && d->Has("generator")) {
      d->Bad("path", "conflicts with 'generator'; give one source");
    }
  }
  if (auto f = root.Child("forget")) {
    c.forget.kind = f->Str("kind", c.forget.kind);
    c.forget.label = static_cast<int>(f->Int("label", c.forget.label));
    c.forget.size = f->Count("size", c.forget.size);
    c.forget.fraction = f->Num("fraction", c.forget.fraction);
    if (f->Has("rows")) c.forget.rows = f->CountList("rows");
    f->Finish();
    const std::set<std::string> kinds{"none", "cluster", "class",
                                      "random", "rows", "mask"};
    if (kinds.count(c.forget.kind) == 0) {
      f->Bad("kind", "must be one of none, cluster, class, random, rows, mask");
    }
  }
  if (auto t = root.Child("template")) {
    c.circuit.n_qubits = static_cast<int>(t->Int("n_qubits", c.circuit.n_qubits));
    c.circuit.depth = static_cast<int>(t->Int("depth", c.circuit.depth));
    const std::string ent = t->Str("entangler", "linear");
    if (ent == "ring") {
      c.circuit.entangler = pqc::Entangler::kRing;
    } else if (ent != "linear") {
      t->Bad("entangler", "must be 'linear' or 'ring'");
    }
    c.circuit.reupload = t->Bool("reupload", c.circuit.reupload);
    c.circuit.noise = t->OptNum("noise");
    c.circuit.data_scale = t->Num("data_scale", c.circuit.data_scale);
    t->Finish();
    if (c.circuit.n_qubits < 1 || c.circuit.n_qubits > qcore::kMaxQubits) {
      t->Bad("n_qubits", "must lie in [1, 10]");
    }
    if (c.circuit.depth < 1) t->Bad("depth", "must be at least 1");
  }
  if (auto t = root.Child("train")) c.train = ParseTrain(*t, c.train);
  if (auto m = root.Child("mechanism")) {
    MechanismSpec& ms = c.mechanism;
    ms.name = m->Str("name", ms.name);
    const std::set<std::string> names{"qmu_i", "reset_partial", "influence",
                                      "fisher_step", "none"};
    if (names.count(ms.name) == 0) {
      m->Bad("name",
             "must be one of qmu_i, reset_partial, influence, fisher_step, none");
    }
    ms.qmu.step = ms.step = m->Num("step", ms.qmu.step);
    ms.qmu.clip_norm = m->Num("clip_norm", ms.qmu.clip_norm);
    ms.qmu.trust_radius = m->Num("trust_radius", ms.qmu.trust_radius);
    ms.qmu.damping = ms.damping = m->Num("damping", ms.qmu.damping);
    if (m->Has("metric")) ms.qmu.metric = ParseMetric(*m);
    ms.qmu.block_size = m->Count("block_size", ms.qmu.block_size);
    ms.qmu.batch_size = m->Count("batch_size", ms.qmu.batch_size);
    ms.qmu.max_iterations =
        static_cast<int>(m->Int("iterations", ms.qmu.max_iterations));
    if (auto ft = m->Child("fine_tune")) {
      ms.qmu.fine_tune = ParseTrain(*ft, ms.qmu.fine_tune);
    }
    ms.fraction = m->Num("fraction", ms.fraction);
    ms.cert_threshold = m->Num("cert_threshold", ms.cert_threshold);
    m->Finish();
    ms.qmu.Validate();
    if (!(ms.fraction > 0.0 && ms.fraction <= 1.0)) {
      m->Bad("fraction", "must lie in (0, 1]");
    }
    if (ms.cert_threshold < 0.0) m->Bad("cert_threshold", "must be non-negative");
  }
  if (auto d = root.Child("dp")) {
    privacy::DPConfig dp;
    dp.clip_norm = d->Num("clip_norm", dp.clip_norm);
    dp.epsilon = d->OptNum("epsilon");
    dp.sigma = d->OptNum("sigma");
    dp.delta = d->Num("delta", dp.delta);
    d->Finish();
    dp.Validate();
    c.dp = dp;
  }
  if (auto f = root.Child("federation")) {
    fed::SimulationConfig& s = c.fed;
    s.n_clients = f->Count("clients", s.n_clients);
    const std::string topo = f->Str("topology", "star");
    if (topo == "ring") {
      s.fed.topology = fed::Topology::kRing;
    } else if (topo != "star") {
      f->Bad("topology", "must be 'star' or 'ring'");
    }
    s.fed.rounds = static_cast<int>(f->Int("rounds", s.fed.rounds));
    s.fed.learning_rate = f->Num("learning_rate", s.fed.learning_rate);
    s.fed.mask_scale = f->Num("mask_scale", s.fed.mask_scale);
    s.joint_register = f->Bool("joint_register", s.joint_register);
    if (f->Has("unlearn_events")) {
      const json& ev = f->Raw("unlearn_events");
      if (!ev.is_array()) f->Bad("unlearn_events", "must be a list");
      for (std::size_t i = 0; i < ev.size(); ++i) {
        Obj e(ev[i], f->Join("unlearn_events[" + std::to_string(i) + "]"));
        fed::UnlearnEvent u;
        u.round = static_cast<int>(e.Int("round", 0));
        u.client = static_cast<int>(e.Int("client", 0));
        u.config.mode = ParseMode(e);
        u.config.alpha = e.OptNum("alpha");
        u.config.retrain_rounds =
            static_cast<int>(e.Int("retrain_rounds", u.config.retrain_rounds));
        e.Finish();
        s.events.push_back(u);
      }
    }
    f->Finish();
    if (s.n_clients < 2) f->Bad("clients", "must be at least 2");
    if (s.fed.rounds < 0) f->Bad("rounds", "must be non-negative");
    if (!(s.fed.learning_rate > 0.0)) f->Bad("learning_rate", "must be positive");
    if (s.fed.mask_scale < 0.0) f->Bad("mask_scale", "must be non-negative");
  }
  if (auto k = root.Child("kernel")) {
    c.kernel.n_qubits = static_cast<int>(k->Int("n_qubits", c.kernel.n_qubits));
    c.kernel.depth = static_cast<int>(k->Int("depth", c.kernel.depth));
    c.kernel.lambda = k->Num("lambda", c.kernel.lambda);
    k->Finish();
    if (!(c.kernel.lambda > 0.0)) k->Bad("lambda", "must be positive");
  }
  if (auto b = root.Child("bench")) {
    c.bench.repeats = static_cast<int>(b->Int("repeats", c.bench.repeats));
    if (b->Has("qubits")) {
      c.bench.qubits.clear();
      for (std::size_t q : b->CountList("qubits")) {
        c.bench.qubits.push_back(static_cast<int>(q));
      }
    }
    c.bench.depth = static_cast<int>(b->Int("depth", c.bench.depth));
    c.bench.kernel_n = b->Count("kernel_n", c.bench.kernel_n);
    b->Finish();
    if (c.bench.repeats < 1) b->Bad("repeats", "must be at least 1");
    if (c.bench.kernel_n < 4) b->Bad("kernel_n", "must be at least 4");
  }
  if (auto a = root.Child("audit")) {
    if (a->Has("theta")) c.audit.theta = a->NumList("theta");
    if (a->Has("report")) c.audit.report = Resolve(base_dir, a->Str("report", ""));
    a->Finish();
  }
  root.Finish();
  return c;
}

json RunConfig::ToJson() const {
  json j;
  j["experiment"] = KindName(kind);
  if (seed) j["seed"] = *seed;
  json d;
  if (dataset.path) {
    d["path"] = dataset.path->filename().string();
  } else {
    d = {{"generator", dataset.generator}, {"n", dataset.n}, {"noise", dataset.noise}};
  }
  j["dataset"] = d;
  j["forget"] = {{"kind", forget.kind}, {"label", forget.label},
                 {"size", forget.size}, {"fraction", forget.fraction},
                 {"rows", forget.rows}};
  j["template"] = {{"n_qubits", circuit.n_qubits},
                   {"depth", circuit.depth},
                   {"entangler", circuit.entangler == pqc::Entangler::kLinear
                                     ? "linear"
                                     : "ring"},
                   {"reupload", circuit.reupload},
                   {"noise", circuit.noise ? json(*circuit.noise) : json(nullptr)},
                   {"data_scale", circuit.data_scale}};
  j["train"] = TrainJson(train);
  j["mechanism"] = {{"name", mechanism.name},
                    {"step", mechanism.qmu.step},
                    {"clip_norm", privacy::JsonNumber(mechanism.qmu.clip_norm)},
                    {"trust_radius",
                     privacy::JsonNumber(mechanism.qmu.trust_radius)},
                    {"damping", mechanism.qmu.damping},
                    {"metric", unlearn::MetricName(mechanism.qmu.metric)},
                    {"block_size", mechanism.qmu.block_size},
                    {"batch_size", mechanism.qmu.batch_size},
                    {"iterations", mechanism.qmu.max_iterations},
                    {"fine_tune", TrainJson(mechanism.qmu.fine_tune)},
                    {"fraction", mechanism.fraction},
                    {"cert_threshold", mechanism.cert_threshold}};
  if (dp) {
    j["dp"] = {{"clip_norm", privacy::JsonNumber(dp->clip_norm)},
               {"epsilon", dp->epsilon ? json(*dp->epsilon) : json(nullptr)},
               {"sigma", dp->sigma ? json(*dp->sigma) : json(nullptr)},
               {"delta", dp->delta}};
  }
  json events = json::array();
  for (const fed::UnlearnEvent& e : fed.events) {
    events.push_back({{"round", e.round},
                      {"client", e.client},
                      {"mode", fed::UnlearnModeName(e.config.mode)},
                      {"alpha", e.config.alpha ? json(*e.config.alpha)
                                               : json(nullptr)},
                      {"retrain_rounds", e.config.retrain_rounds}});
  }
  j["federation"] = {{"clients", fed.n_clients},
                     {"topology", fed::TopologyName(fed.fed.topology)},
                     {"rounds", fed.fed.rounds},
                     {"learning_rate", fed.fed.learning_rate},
                     {"mask_scale", fed.fed.mask_scale},
                     {"joint_register", fed.joint_register},
                     {"unlearn_events", events}};
  j["kernel"] = {{"n_qubits", kernel.n_qubits},
                 {"depth", kernel.depth},
                 {"lambda", kernel.lambda}};
  j["bench"] = {{"repeats", bench.repeats},
                {"qubits", bench.qubits},
                {"depth", bench.depth},
                {"kernel_n", bench.kernel_n}};
  if (audit.theta) j["audit"]["theta"] = *audit.theta;
  if (audit.report) j["audit"]["report"] = audit.report->filename().string();
  return j;
}

RunConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowIo("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    ThrowValidation("config '" + path.string() + "' is not valid JSON: " +
                    e.what());
  }
  return RunConfig::FromJson(j, path.parent_path());
}

RunResult Run(const RunConfig& cfg) {
  Require(cfg.seed.has_value(), "config field 'seed' is required");
  switch (cfg.kind) {
    case Kind::kGenData:
      return RunGenData(cfg);
    case Kind::kTrain:
      return RunTrain(cfg, false);
    case Kind::kRetrain:
      return RunTrain(cfg, true);
    case Kind::kUnlearn:
      return RunUnlearn(cfg, false);
    case Kind::kAudit:
      return RunUnlearn(cfg, true);
    case Kind::kFed:
      return RunFed(cfg);
    case Kind::kKernel:
      return RunKernel(cfg);
    case Kind::kBench:
      return RunBench(cfg);
  }
  ThrowValidation("unknown experiment");
}

}  // namespace qmu::experiment
