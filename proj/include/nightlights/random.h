// Copyright 2026 The Nightlights Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Counter-based pseudo-random streams.
//
// Every stochastic stage draws from a stream keyed by (seed, entity key), so
// the value a given entity receives never depends on iteration order or on
// the number of worker threads. The standard <random> distributions are not
// used because their output is implementation-defined.

#ifndef NIGHTLIGHTS_RANDOM_H_
#define NIGHTLIGHTS_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

namespace nightlights {

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive hash of a short sequence of words.
constexpr uint64_t HashWords(std::initializer_list<uint64_t> words) {
  uint64_t h = 0x6a09e667f3bcc909ULL;
  for (uint64_t w : words) h = Mix64(h ^ Mix64(w));
  return h;
}

class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(Mix64(key)) {}
  CounterRng(std::initializer_list<uint64_t> key_words)
      : key_(HashWords(key_words)) {}

  uint64_t NextU64() { return Mix64(key_ ^ Mix64(counter_++)); }

  // Uniform on the open interval (0, 1).
  double Uniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t Below(uint64_t n) {
    // Lemire's multiply-shift; the residual bias is below 2^-64 * n.
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(NextU64()) * n) >> 64);
  }

  double Normal() {
    const double u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Poisson variate; exact inversion for small means, normal approximation
  // (rounded, clamped at zero) above 64.
  uint64_t Poisson(double mean);

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

// Zero-mean Laplace variate with the given scale from a uniform u in (0, 1),
// by inversion of the CDF. scale == 0 yields exactly 0.
inline double LaplaceFromUniform(double u, double scale) {
  if (scale == 0.0) return 0.0;
  const double c = u - 0.5;
  const double mag = -scale * std::log1p(-2.0 * std::abs(c));
  return c < 0 ? -mag : mag;
}

// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void Shuffle(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.Below(i);
    std::swap(items[i - 1], items[j]);
  }
}

inline uint64_t CounterRng::Poisson(double mean) {
  if (mean <= 0) return 0;
  if (mean > 64) {
    const double x = std::round(mean + std::sqrt(mean) * Normal());
    return x < 0 ? 0 : static_cast<uint64_t>(x);
  }
  const double limit = std::exp(-mean);
  double p = 1.0;
  uint64_t k = 0;
  while (true) {
    p *= Uniform();
    if (p <= limit) return k;
    ++k;
  }
}

}  // namespace nightlights

#endif  // NIGHTLIGHTS_RANDOM_H_
