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

#include "carbonlaw/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace carbonlaw {

std::optional<Count> try_mul(Count a, Count b) {
  Count out = 0;
  if (__builtin_mul_overflow(a, b, &out)) return std::nullopt;
  return out;
}

Count checked_mul(Count a, Count b, const char* what) {
  auto out = try_mul(a, b);
  if (!out) {
    throw OverflowError(
        fmt::format("integer overflow computing {} ({} * {})", what, a, b));
  }
  return *out;
}

std::vector<std::pair<Count, unsigned>> factorize(Count n) {
  if (n == 0) throw std::invalid_argument("factorize: n must be positive");
  std::vector<std::pair<Count, unsigned>> out;
  auto take = [&](Count p) {
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e > 0) out.emplace_back(p, e);
  };
  take(2);
  take(3);
  for (Count p = 5; p <= n / p; p += 6) {
    take(p);
    take(p + 2);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

std::vector<Count> divisors_from_factors(
    const std::vector<std::pair<Count, unsigned>>& factors, Count limit) {
  std::vector<Count> out{1};
  for (auto [p, e] : factors) {
    const std::size_t base = out.size();
    Count pk = 1;
    for (unsigned k = 1; k <= e; ++k) {
      const auto next = try_mul(pk, p);
      if (!next || *next > limit) break;
      pk = *next;
      for (std::size_t i = 0; i < base; ++i) {
        const auto d = try_mul(out[i], pk);
        if (d && *d <= limit) out.push_back(*d);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Count> divisors(Count n) { return divisors_from_factors(factorize(n)); }

std::vector<Count> divisors_of_four_square(Count x) {
  auto f = factorize(x);
  for (auto& [p, e] : f) e *= 2;
  if (!f.empty() && f.front().first == 2) {
    f.front().second += 2;
  } else {
    f.insert(f.begin(), {2, 2});
  }
  return divisors_from_factors(f);
}

Count round_to_multiple(double value, Count step) {
  if (step == 0) throw std::invalid_argument("round_to_multiple: zero step");
  if (!std::isfinite(value) || value < 0) {
    throw std::invalid_argument("round_to_multiple: value must be finite and >= 0");
  }
  const double k = std::round(value / static_cast<double>(step));
  if (k >= static_cast<double>(std::numeric_limits<Count>::max() / step)) {
    throw OverflowError("round_to_multiple: result exceeds uint64");
  }
  return std::max<Count>(1, static_cast<Count>(k)) * step;
}

Count round_up_to_multiple(Count value, Count step) {
  if (step == 0) throw std::invalid_argument("round_up_to_multiple: zero step");
  const Count k = value / step + (value % step != 0 ? 1 : 0);
  return checked_mul(k, step, "round_up_to_multiple");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace carbonlaw
