// Copyright 2026 The ldp_robust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDP_ROBUST_RNG_H_
#define LDP_ROBUST_RNG_H_

#include <array>
#include <cstdint>
#include <random>

namespace ldp_robust {

using Engine = std::mt19937_64;

// Identifies one reproducible random stream. Two equal seeds always produce
// identical engines, so every randomized routine takes one of these (or an
// engine built from one) instead of touching global state.
struct RngSeed {
  uint64_t seed = 0;
  uint64_t stream_index = 0;

  // Sibling stream sharing the same root seed.
  RngSeed Stream(uint64_t index) const { return RngSeed{seed, index}; }

  // Independent root for a sub-computation, keyed by `tag`.
  RngSeed Child(uint64_t tag) const {
    std::seed_seq seq{Lo(seed), Hi(seed), Lo(stream_index), Hi(stream_index),
                      Lo(tag),  Hi(tag),  0x6c64707bu};
    std::array<uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return RngSeed{(uint64_t{out[1]} << 32) | out[0], 0};
  }

  friend bool operator==(const RngSeed&, const RngSeed&) = default;

 private:
  static uint32_t Lo(uint64_t x) { return static_cast<uint32_t>(x); }
  static uint32_t Hi(uint64_t x) { return static_cast<uint32_t>(x >> 32); }

  friend Engine MakeEngine(const RngSeed& s);
};

inline Engine MakeEngine(const RngSeed& s) {
  std::seed_seq seq{RngSeed::Lo(s.seed), RngSeed::Hi(s.seed),
                    RngSeed::Lo(s.stream_index), RngSeed::Hi(s.stream_index)};
  return Engine(seq);
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw. Fixed
// arithmetic so streams are bit-identical across standard libraries.
inline double UniformUnit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline bool Bernoulli(Engine& engine, double p) {
  return UniformUnit(engine) < p;
}

// Uniform integer in [0, n), n > 0.
inline uint64_t UniformIndex(Engine& engine, uint64_t n) {
  return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine);
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_RNG_H_
