/*
 * Copyright 2026 The rnncap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RNNCAP_RNG_HPP
#define RNNCAP_RNG_HPP

#include <cmath>
#include <cstdint>

namespace rnncap {

/// Splittable counter-based pseudo-random generator.
///
/// Every stream is a pure function of (key, counter), so derived streams are
/// independent of the order in which work items run. All randomness in the
/// library flows through an explicit 64-bit seed via this type; nothing reads
/// entropy from the environment.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kGamma)) {}

  /// Derives an independent stream for a work item (trial, draw, restart...).
  /// Calling split with distinct ids yields decorrelated streams regardless
  /// of how many values the parent has produced.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(key_ + (stream + 1) * kGamma), 0);
  }

  std::uint64_t next_u64() {
    counter_ += kGamma;
    return mix(key_ + counter_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Standard normal via Box-Muller; the pair's second value is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  /// Rademacher sign, +1 or -1 with equal probability.
  int next_sign() { return (next_u64() >> 63) ? 1 : -1; }

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    // Multiply-shift map of the top 64 bits; bias is negligible for the
    // small bounds used here and the result is fully deterministic.
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(wide >> 64);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  Rng(std::uint64_t key, int) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace rnncap

#endif  // RNNCAP_RNG_HPP
