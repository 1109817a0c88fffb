// Copyright 2026 The eventpf Authors
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

#ifndef EVENTPF_RNG_HPP_
#define EVENTPF_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace eventpf {

// splitmix64 finalizer (Vigna). Bit-stable across platforms, unlike the
// std::<random> distributions.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two uniforms, no cached
  // spare so draw counts stay deterministic.
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
};

// Named purposes for the per-step substreams. Keying draws by
// (seed, stream, step[, item]) instead of consumption order lets protocol
// variants replay identical randomness at identical time steps.
enum class Stream : std::uint64_t {
  kInit = 1,
  kTrajectory = 2,
  kFilterResample = 3,
  kFilterPropose = 4,
  kFilterWeight = 5,
  kSecondaryResample = 6,
  kSecondaryPropagate = 7,
  kTriggerProb = 8,
  kOracle = 9,
};

class RngFactory {
 public:
  explicit RngFactory(std::uint64_t master_seed) : master_(master_seed) {}

  Rng at(Stream stream, std::uint64_t step, std::uint64_t item = 0) const {
    std::uint64_t s = mix64(master_ ^ 0x8c5fb1a3d0e947c2ULL);
    s = mix64(s ^ static_cast<std::uint64_t>(stream));
    s = mix64(s ^ step);
    s = mix64(s ^ item);
    return Rng(s);
  }

  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
};

}  // namespace eventpf

#endif  // EVENTPF_RNG_HPP_
