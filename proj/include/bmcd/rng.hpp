// Copyright (c) 2026 The bmcd authors.
//
// Licensed under the Apache License, Version 2.0 (the "License").
// You may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Random number generation with a cross-platform stability guarantee.
//
// The engine is xoshiro256** (Blackman & Vigna), seeded through SplitMix64.
// Every variate drawn by this library is derived from the raw 64-bit stream
// by the functions in this header only; no <random> distribution is used,
// so a given seed yields bit-identical output on every conforming platform.
//
// Seed derivation: derive_seed(master, a, b, ...) folds each tag into the
// master seed with the SplitMix64 finalizer. Strings are folded through
// 64-bit FNV-1a first. Work items keyed this way are order independent.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace bmcd {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
inline constexpr std::uint64_t seed_tag(std::uint64_t v) noexcept { return v; }
inline constexpr std::uint64_t seed_tag(std::string_view v) noexcept { return fnv1a64(v); }
}  // namespace detail

/// Mixes any number of integer or string tags into a master seed.
template <typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t master, const Tags&... tags) noexcept {
  std::uint64_t h = splitmix64_mix(master + 0x9e3779b97f4a7c15ULL);
  ((h = splitmix64_mix(h ^ (detail::seed_tag(tags) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)))), ...);
  return h;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      s = splitmix64_mix(x);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as the argument of log().
  double uniform_pos() noexcept { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal by the polar Box-Muller method (no cached pair).
  double normal() noexcept {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace bmcd
