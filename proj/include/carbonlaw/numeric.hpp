/* Copyright 2026 The carbonlaw Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace carbonlaw {

using Count = std::uint64_t;

constexpr double kSecondsPerHour = 3600.0;
constexpr double kSecondsPerDay = 86400.0;
constexpr double kSecondsPerYear = 365.0 * kSecondsPerDay;
constexpr double kJoulesPerKwh = 3.6e6;
constexpr double kBytesPerGb = 1e9;

// Exception hierarchy. The CLI maps each leaf onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

/// a * b, throwing OverflowError naming `what` if the product leaves uint64.
Count checked_mul(Count a, Count b, const char* what);

/// a * b, or nullopt on overflow.
std::optional<Count> try_mul(Count a, Count b);

/// Prime factorization as (prime, exponent) pairs, ascending primes.
std::vector<std::pair<Count, unsigned>> factorize(Count n);

/// Divisors up to `limit` of the number with the given factorization, ascending.
std::vector<Count> divisors_from_factors(
    const std::vector<std::pair<Count, unsigned>>& factors,
    Count limit = std::numeric_limits<Count>::max());

/// All divisors of n, ascending. n must be >= 1.
std::vector<Count> divisors(Count n);

/// Divisors of 4 * x^2 that fit in uint64, without forming the square.
std::vector<Count> divisors_of_four_square(Count x);

/// Nearest positive multiple of `step` (never below `step`).
Count round_to_multiple(double value, Count step);

/// Smallest multiple of `step` that is >= value.
Count round_up_to_multiple(Count value, Count step);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace carbonlaw
