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

#ifndef QMU_COMMON_HPP_
#define QMU_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qmu {

// Numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kValidation = 1,
  kInvariant = 2,
  kIo = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void ThrowValidation(const std::string& what);
[[noreturn]] void ThrowInvariant(const std::string& what);
[[noreturn]] void ThrowIo(const std::string& what);

inline void Require(bool ok, const std::string& what) {
  if (!ok) ThrowValidation(what);
}

using Rng = std::mt19937_64;

// Deterministic child seed for a named sub-computation. Stable across
// platforms: splitmix64 over an FNV-1a hash of the tag.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view tag,
                         std::uint64_t index = 0);

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

}  // namespace qmu

#endif  // QMU_COMMON_HPP_
