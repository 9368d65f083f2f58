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

#ifndef QMU_PRIVACY_HPP_
#define QMU_PRIVACY_HPP_

// Gradient clipping, Gaussian-mechanism calibration and Renyi-DP
// accounting for full-participation Gaussian rounds.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmu/common.hpp"
#include "qmu/geo.hpp"

namespace qmu::privacy {

// g if ||g||_2 <= C, else g * C / ||g||_2. C may be +infinity.
geo::GradVector Clip(std::span<const double> g, double clip_norm);

struct SigmaResult {
  double sigma = 0.0;
  // epsilon >= 1: the closed form is used outside the regime it is proven in.
  bool outside_proof_regime = false;
};

// sigma = C sqrt(2 ln(1.25/delta)) / epsilon.
SigmaResult GaussianSigma(double clip_norm, double epsilon, double delta);

// g + N(0, sigma^2) per coordinate.
geo::GradVector AddNoise(std::span<const double> g, double sigma, Rng& rng);

struct DPConfig {
  double clip_norm = 1.0;
  // Exactly one of epsilon / sigma drives calibration.
  std::optional<double> epsilon;
  std::optional<double> sigma;
  double delta = 1e-5;

  void Validate() const;
  SigmaResult Calibrate() const;
};

inline constexpr const char* kGaussianMechanism = "gaussian";

struct RoundEntry {
  double sigma = 0.0;
  double clip_norm = 0.0;
  std::string mechanism = kGaussianMechanism;
  bool outside_proof_regime = false;
};

struct Composition {
  std::size_t rounds = 0;
  double delta = 0.0;
  // Renyi accounting converted at delta; +inf when any round is noiseless.
  double rdp_epsilon = 0.0;
  double best_order = 0.0;
  // Sum of per-round epsilons, each converted at delta / rounds.
  double naive_epsilon = 0.0;
};

// Orders 1.25, 1.5, ..., 64.
const std::vector<double>& RdpOrders();

// Renyi divergence of order `order` for one Gaussian round: a C^2 / (2 s^2).
double GaussianRdp(double order, double clip_norm, double sigma);

class PrivacyLedger {
 public:
  void Record(double sigma, double clip_norm,
              std::string mechanism = kGaussianMechanism,
              bool outside_proof_regime = false);

  const std::vector<RoundEntry>& rounds() const { return rounds_; }
  std::size_t size() const { return rounds_.size(); }

  // Composition over the first `prefix` rounds (all rounds by default).
  Composition Compose(double delta,
                      std::optional<std::size_t> prefix = std::nullopt) const;

  nlohmann::json ToJson(double delta) const;

 private:
  std::vector<RoundEntry> rounds_;
};

// JSON cannot carry infinities; they are written as the string "inf".
nlohmann::json JsonNumber(double v);

}  // namespace qmu::privacy

#endif  // QMU_PRIVACY_HPP_
