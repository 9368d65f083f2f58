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

// Command-line driver. All work goes through the C API in libqmu.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qmu/qmu.h"

namespace {

constexpr const char* kSubcommands[] = {"gen-data", "train",  "unlearn",
                                        "retrain",  "audit",  "fed",
                                        "kernel",   "bench"};

int Fail(qmu_status st) {
  std::fprintf(stderr, "qmu: error: %s\n", qmu_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum machine unlearning lab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", qmu_version());

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config, "Run config (JSON)");
  app.add_option("--seed", seed, "Master seed; overrides the config");
  app.add_option("--out", out, "Output directory; overrides the config");

  std::string generator = "two_moons";
  std::size_t n = 100;
  double noise = 0.1;
  CLI::App* gen = nullptr;
  for (const char* name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    if (std::string(name) == "gen-data") {
      sub->description("Generate a dataset CSV");
      gen = sub;
    } else {
      sub->description(std::string("Run the ") + name + " experiment");
    }
  }
  gen->add_option("--generator", generator, "two_moons, blobs or xor");
  gen->add_option("--n", n, "Number of samples");
  gen->add_option("--noise", noise, "Generator noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string kind = chosen->get_name();
  const char* out_dir = out.empty() ? nullptr : out.c_str();
  char* result = nullptr;
  qmu_status st;
  if (config.empty()) {
    if (kind != "gen-data") {
      std::fprintf(stderr, "qmu: error: --config is required for '%s'\n",
                   kind.c_str());
      return 1;
    }
    const nlohmann::json cfg = {
        {"dataset", {{"generator", generator}, {"n", n}, {"noise", noise}}},
        {"forget", {{"kind", "none"}}}};
    st = qmu_run_experiment_json(kind.c_str(), cfg.dump().c_str(), nullptr,
                                 seed.has_value(), seed.value_or(0), out_dir,
                                 &result);
  } else {
    st = qmu_run_experiment(kind.c_str(), config.c_str(), seed.has_value(),
                            seed.value_or(0), out_dir, &result);
  }
  if (st != QMU_OK) return Fail(st);
  std::printf("%s\n", result);
  qmu_string_free(result);
  return 0;
}
