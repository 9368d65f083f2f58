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

#include "qmu/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "qmu/common.hpp"

namespace qmu::data {
namespace {

using Rows = std::vector<std::vector<double>>;

void MinMaxScale(Rows& rows) {
  const std::size_t d = rows.front().size();
  for (std::size_t c = 0; c < d; ++c) {
    double lo = rows[0][c], hi = rows[0][c];
    for (const auto& r : rows) {
      lo = std::min(lo, r[c]);
      hi = std::max(hi, r[c]);
    }
    const double span = hi - lo;
    for (auto& r : rows) {
      r[c] = span > 0.0
                 ? -kFeatureHalfRange + 2.0 * kFeatureHalfRange * (r[c] - lo) / span
                 : 0.0;
    }
  }
}

std::vector<double> Linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) /
                                  static_cast<double>(n - 1);
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    ThrowValidation("dataset line " + std::to_string(line) +
                    ": cannot parse number '" + s + "'");
  }
}

}  // namespace

std::vector<learn::Split> DefaultSplit(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(DeriveSeed(seed, "split"));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  std::vector<learn::Split> split(n, learn::Split::kTest);
  for (std::size_t i = 0; i < n_train && i < n; ++i) {
    split[perm[i]] = learn::Split::kTrain;
  }
  return split;
}

learn::Dataset GenerateDataset(std::string_view name, std::size_t n,
                               double noise, std::uint64_t seed) {
  Require(n >= 4, "dataset.n must be at least 4");
  Require(noise >= 0.0 && std::isfinite(noise),
          "dataset.noise must be non-negative");
  Rng rng(DeriveSeed(seed, "generate"));
  std::normal_distribution<double> jitter(0.0, 1.0);
  auto noisy = [&](double v) { return v + noise * jitter(rng); };

  Rows rows;
  std::vector<int> labels;
  if (name == "two_moons") {
    const std::size_t outer = (n + 1) / 2;
    const std::size_t inner = n / 2;
    for (double t : Linspace(0.0, std::numbers::pi, outer)) {
      const double a = noisy(std::cos(t));
      const double b = noisy(std::sin(t));
      rows.push_back({a, b});
      labels.push_back(1);
    }
    for (double t : Linspace(0.0, std::numbers::pi, inner)) {
      const double a = noisy(1.0 - std::cos(t));
      const double b = noisy(0.5 - std::sin(t));
      rows.push_back({a, b});
      labels.push_back(-1);
    }
  } else if (name == "blobs") {
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i < (n + 1) / 2 ? 1 : -1;
      const double a = noisy(label);
      const double b = noisy(label);
      rows.push_back({a, b});
      labels.push_back(label);
    }
  } else if (name == "xor") {
    static constexpr double kCorners[4][2] = {
        {1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = kCorners[i % 4];
      const double a = noisy(c[0]);
      const double b = noisy(c[1]);
      rows.push_back({a, b});
      labels.push_back(c[0] * c[1] > 0 ? 1 : -1);
    }
  } else {
    ThrowValidation("dataset.generator: unknown generator '" +
                    std::string(name) + "'");
  }
  MinMaxScale(rows);
  std::vector<learn::Split> split = DefaultSplit(rows.size(), seed);
  std::vector<bool> forget(rows.size(), false);
  return learn::Dataset(std::move(rows), std::move(labels), std::move(split),
                        std::move(forget));
}

std::string ToCsv(const learn::Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.n_features(); ++c) {
    out += "f" + std::to_string(c) + ",";
  }
  out += "label,split,forget\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features()[i]) out += FormatDouble(v) + ",";
    out += std::to_string(data.labels()[i]);
    out += data.split()[i] == learn::Split::kTrain ? ",train," : ",test,";
    out += data.forget_mask()[i] ? "1\n" : "0\n";
  }
  return out;
}

learn::Dataset FromCsv(std::string_view text, std::uint64_t split_seed) {
  std::istringstream in{std::string(text)};
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)),
          "dataset CSV is empty");
  const std::vector<std::string> header = SplitLine(line);
  std::size_t d = 0;
  while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
  Require(d >= 1, "dataset CSV header must start with f0");
  Require(d < header.size() && header[d] == "label",
          "dataset CSV header: expected 'label' after the feature columns");
  int split_col = -1, forget_col = -1;
  for (std::size_t c = d + 1; c < header.size(); ++c) {
    if (header[c] == "split" && split_col < 0) {
      split_col = static_cast<int>(c);
    } else if (header[c] == "forget" && forget_col < 0) {
      forget_col = static_cast<int>(c);
    } else {
      ThrowValidation("dataset CSV header: unexpected column '" + header[c] +
                      "'");
    }
  }

  Rows rows;
  std::vector<int> labels;
  std::vector<learn::Split> split;
  std::vector<bool> forget;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitLine(line);
    Require(cells.size() == header.size(),
            "dataset line " + std::to_string(line_no) +
                ": wrong number of columns");
    std::vector<double> row(d);
    for (std::size_t c = 0; c < d; ++c) row[c] = ParseDouble(cells[c], line_no);
    rows.push_back(std::move(row));
    const std::string& lab = cells[d];
    Require(lab == "1" || lab == "-1" || lab == "+1",
            "dataset line " + std::to_string(line_no) +
                ": label must be -1 or 1");
    labels.push_back(lab == "-1" ? -1 : 1);
    if (split_col >= 0) {
      const std::string& s = cells[static_cast<std::size_t>(split_col)];
      Require(s == "train" || s == "test",
              "dataset line " + std::to_string(line_no) +
                  ": split must be train or test");
      split.push_back(s == "train" ? learn::Split::kTrain
                                   : learn::Split::kTest);
    }
    if (forget_col >= 0) {
      const std::string& f = cells[static_cast<std::size_t>(forget_col)];
      Require(f == "0" || f == "1", "dataset line " + std::to_string(line_no) +
                                        ": forget must be 0 or 1");
      forget.push_back(f == "1");
    }
  }
  Require(!rows.empty(), "dataset CSV has no data rows");
  bool out_of_range = false;
  for (const auto& r : rows) {
    for (double v : r) {
      if (std::abs(v) > std::numbers::pi) out_of_range = true;
    }
  }
  if (out_of_range) MinMaxScale(rows);
  if (split_col < 0) split = DefaultSplit(rows.size(), split_seed);
  if (forget_col < 0) forget.assign(rows.size(), false);
  return learn::Dataset(std::move(rows), std::move(labels), std::move(split),
                        std::move(forget));
}

void SaveCsv(const learn::Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowIo("cannot write dataset to " + path.string());
  out << ToCsv(data);
  if (!out) ThrowIo("failed writing dataset to " + path.string());
}

learn::Dataset LoadCsv(const std::filesystem::path& path,
                       std::uint64_t split_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowIo("cannot read dataset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromCsv(ss.str(), split_seed);
}

std::vector<bool> ForgetCluster(const learn::Dataset& data, int label,
                                std::size_t size) {
  Require(size >= 1, "forget cluster size must be at least 1");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.split()[i] == learn::Split::kTrain && data.labels()[i] == label) {
      members.push_back(i);
    }
  }
  Require(size <= members.size(),
          "forget cluster larger than the class's train rows");
  std::size_t anchor = members.front();
  for (std::size_t i : members) {
    if (data.features()[i][0] > data.features()[anchor][0]) anchor = i;
  }
  auto dist2 = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t c = 0; c < data.n_features(); ++c) {
      const double diff = data.features()[i][c] - data.features()[anchor][c];
      s += diff * diff;
    }
    return s;
  };
  std::stable_sort(members.begin(), members.end(),
                   [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
  std::vector<bool> mask(data.size(), false);
  for (std::size_t k = 0; k < size; ++k) mask[members[k]] = true;
  return mask;
}

std::vector<bool> ForgetClass(const learn::Dataset& data, int label) {
  std::vector<bool> mask(data.size(), false);
  for (std::size_t i = 0; i < data.size(); ++i) {
    mask[i] = data.split()[i] == learn::Split::kTrain && data.labels()[i] == label;
  }
  return mask;
}

std::vector<bool> ForgetRandom(const learn::Dataset& data, double fraction,
                               std::uint64_t seed) {
  Require(fraction > 0.0 && fraction <= 1.0,
          "forget fraction must lie in (0, 1]");
  auto train = data.Indices(learn::Subset::kTrain);
  Rng rng(DeriveSeed(seed, "forget"));
  std::shuffle(train.begin(), train.end(), rng);
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(train.size())));
  std::vector<bool> mask(data.size(), false);
  for (std::size_t i = 0; i < k && i < train.size(); ++i) mask[train[i]] = true;
  return mask;
}

std::vector<bool> ForgetRows(const learn::Dataset& data,
                             const std::vector<std::size_t>& rows) {
  std::vector<bool> mask(data.size(), false);
  for (std::size_t r : rows) {
    Require(r < data.size(), "forget row index out of range");
    Require(data.split()[r] == learn::Split::kTrain,
            "forget rows must belong to the train split");
    mask[r] = true;
  }
  return mask;
}

}  // namespace qmu::data
