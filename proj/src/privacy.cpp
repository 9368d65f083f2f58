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

#include "qmu/privacy.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace qmu::privacy {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Conversion {
  double epsilon = kInf;
  double order = 0.0;
};

// min over the order grid of rdp(a) + ln(1/delta)/(a-1).
template <typename RdpFn>
Conversion ConvertRdp(const RdpFn& rdp, double delta) {
  Conversion best;
  const double log_inv_delta = std::log(1.0 / delta);
  for (double a : RdpOrders()) {
    const double eps = rdp(a) + log_inv_delta / (a - 1.0);
    if (eps < best.epsilon) {
      best.epsilon = eps;
      best.order = a;
    }
  }
  return best;
}

}  // namespace

geo::GradVector Clip(std::span<const double> g, double clip_norm) {
  Require(clip_norm > 0.0, "clip norm must be positive");
  geo::GradVector out(g.begin(), g.end());
  const double norm = geo::Norm2(g);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (double& v : out) v *= scale;
  }
  return out;
}

SigmaResult GaussianSigma(double clip_norm, double epsilon, double delta) {
  Require(clip_norm > 0.0 && std::isfinite(clip_norm),
          "dp.clip_norm must be positive and finite");
  Require(epsilon > 0.0 && std::isfinite(epsilon), "dp.epsilon must be positive");
  Require(delta > 0.0 && delta < 1.0, "dp.delta must lie in (0, 1)");
  SigmaResult r;
  r.sigma = clip_norm * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
  r.outside_proof_regime = epsilon >= 1.0;
  return r;
}

geo::GradVector AddNoise(std::span<const double> g, double sigma, Rng& rng) {
  Require(sigma >= 0.0 && std::isfinite(sigma), "noise sigma must be >= 0");
  geo::GradVector out(g.begin(), g.end());
  if (sigma == 0.0) return out;
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : out) v += normal(rng);
  return out;
}

void DPConfig::Validate() const {
  Require(clip_norm > 0.0 && std::isfinite(clip_norm),
          "dp.clip_norm must be positive and finite");
  Require(epsilon.has_value() != sigma.has_value(),
          "dp: exactly one of epsilon or sigma must be set");
  Require(delta > 0.0 && delta < 1.0, "dp.delta must lie in (0, 1)");
  if (epsilon) Require(*epsilon > 0.0, "dp.epsilon must be positive");
  if (sigma) Require(*sigma >= 0.0, "dp.sigma must be non-negative");
}

SigmaResult DPConfig::Calibrate() const {
  Validate();
  if (sigma) return SigmaResult{*sigma, false};
  return GaussianSigma(clip_norm, *epsilon, delta);
}

const std::vector<double>& RdpOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> v;
    for (int i = 5; i <= 256; ++i) v.push_back(0.25 * i);
    return v;
  }();
  return orders;
}

double GaussianRdp(double order, double clip_norm, double sigma) {
  if (sigma == 0.0) return kInf;
  return order * clip_norm * clip_norm / (2.0 * sigma * sigma);
}

void PrivacyLedger::Record(double sigma, double clip_norm,
                           std::string mechanism, bool outside_proof_regime) {
  Require(sigma >= 0.0, "ledger sigma must be non-negative");
  Require(clip_norm > 0.0, "ledger clip norm must be positive");
  rounds_.push_back(
      RoundEntry{sigma, clip_norm, std::move(mechanism), outside_proof_regime});
}

Composition PrivacyLedger::Compose(double delta,
                                   std::optional<std::size_t> prefix) const {
  Require(delta > 0.0 && delta < 1.0, "accounting delta must lie in (0, 1)");
  const std::size_t k = prefix.value_or(rounds_.size());
  Require(k <= rounds_.size(), "ledger prefix beyond recorded rounds");
  for (std::size_t i = 0; i < k; ++i) {
    Require(rounds_[i].mechanism == kGaussianMechanism,
            "ledger: unknown mechanism tag '" + rounds_[i].mechanism + "'");
  }
  Composition c;
  c.rounds = k;
  c.delta = delta;
  if (k == 0) return c;

  const Conversion total = ConvertRdp(
      [&](double a) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          s += GaussianRdp(a, rounds_[i].clip_norm, rounds_[i].sigma);
        }
        return s;
      },
      delta);
  c.rdp_epsilon = total.epsilon;
  c.best_order = total.order;

  const double per_round_delta = delta / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const RoundEntry& r = rounds_[i];
    c.naive_epsilon += ConvertRdp(
                           [&](double a) {
                             return GaussianRdp(a, r.clip_norm, r.sigma);
                           },
                           per_round_delta)
                           .epsilon;
  }
  return c;
}

nlohmann::json JsonNumber(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

nlohmann::json PrivacyLedger::ToJson(double delta) const {
  nlohmann::json rounds = nlohmann::json::array();
  for (std::size_t i = 0; i < rounds_.size(); ++i) {
    const Composition c = Compose(delta, i + 1);
    rounds.push_back({{"round", i},
                      {"sigma", rounds_[i].sigma},
                      {"clip_norm", rounds_[i].clip_norm},
                      {"mechanism", rounds_[i].mechanism},
                      {"outside_proof_regime", rounds_[i].outside_proof_regime},
                      {"cumulative_epsilon", JsonNumber(c.rdp_epsilon)},
                      {"naive_epsilon", JsonNumber(c.naive_epsilon)}});
  }
  const Composition all = Compose(delta);
  return {{"delta", delta},
          {"rounds", rounds},
          {"epsilon", JsonNumber(all.rdp_epsilon)},
          {"best_order", all.best_order},
          {"naive_epsilon", JsonNumber(all.naive_epsilon)},
          {"accountant", "renyi_gaussian_full_participation"}};
}

}  // namespace qmu::privacy
