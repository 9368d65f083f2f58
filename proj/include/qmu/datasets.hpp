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

#ifndef QMU_DATASETS_HPP_
#define QMU_DATASETS_HPP_

// Synthetic dataset generators, forget-set selection and the dataset CSV
// format:
//
//   f0,...,f{d-1},label[,split][,forget]
//
// label in {-1,1}; split in {train,test}; forget in {0,1}. Missing split
// columns get the seeded 80/20 generator split; missing forget columns
// are all zero.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qmu/learn.hpp"

namespace qmu::data {

// Generated features are min-max scaled per column into this symmetric
// range, which sits inside [-pi, pi].
inline constexpr double kFeatureHalfRange = 1.5707963267948966;

// name in {two_moons, blobs, xor}; n >= 4; 80/20 train/test split.
learn::Dataset GenerateDataset(std::string_view name, std::size_t n,
                               double noise, std::uint64_t seed);

std::string ToCsv(const learn::Dataset& data);
learn::Dataset FromCsv(std::string_view text, std::uint64_t split_seed);

void SaveCsv(const learn::Dataset& data, const std::filesystem::path& path);
learn::Dataset LoadCsv(const std::filesystem::path& path,
                       std::uint64_t split_seed);

// Seeded split: the first round(0.8 n) rows of a seeded permutation train.
std::vector<learn::Split> DefaultSplit(std::size_t n, std::uint64_t seed);

// `size` train rows of class `label` nearest to the class member with the
// largest first feature (a contiguous sub-cluster).
std::vector<bool> ForgetCluster(const learn::Dataset& data, int label,
                                std::size_t size);
std::vector<bool> ForgetClass(const learn::Dataset& data, int label);
std::vector<bool> ForgetRandom(const learn::Dataset& data, double fraction,
                               std::uint64_t seed);
std::vector<bool> ForgetRows(const learn::Dataset& data,
                             const std::vector<std::size_t>& rows);

}  // namespace qmu::data

#endif  // QMU_DATASETS_HPP_
