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

// The RAPPOR channel: symbol x in [d] becomes the one-hot vector e_x with every
// coordinate flipped independently with probability
// lambda = 1 / (exp(alpha / 2) + 1).

#ifndef LDP_ROBUST_CHANNEL_H_
#define LDP_ROBUST_CHANNEL_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ldp_robust/error.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

inline constexpr int kMaxChannelDimension = 4096;
inline constexpr double kMaxAlpha = 2.0;

inline double LambdaOfAlpha(double alpha) {
  internal::Require(alpha > 0.0, ErrorCode::kNonPositiveAlpha,
                    "alpha must be positive");
  return 1.0 / (std::exp(alpha / 2.0) + 1.0);
}

// Number of bytes holding one packed d-bit sample.
inline size_t PackedBytes(int d) { return (static_cast<size_t>(d) + 7) / 8; }

inline bool GetBit(const uint8_t* packed, int j) {
  return ((packed[j >> 3] >> (j & 7)) & 1u) != 0;
}

inline void SetBit(uint8_t* packed, int j, bool value) {
  const uint8_t mask = static_cast<uint8_t>(1u << (j & 7));
  if (value) {
    packed[j >> 3] |= mask;
  } else {
    packed[j >> 3] &= static_cast<uint8_t>(~mask);
  }
}

// One privatized report Z in {0,1}^d, bit j stored LSB-first in byte j / 8.
class PrivSample {
 public:
  PrivSample() = default;
  explicit PrivSample(int d) : d_(d), bytes_(PackedBytes(d), 0) {}

  static PrivSample FromBits(std::span<const int> bits) {
    PrivSample s(static_cast<int>(bits.size()));
    for (size_t j = 0; j < bits.size(); ++j) s.Set(static_cast<int>(j), bits[j]);
    return s;
  }
  static PrivSample FromBits(std::initializer_list<int> bits) {
    return FromBits(std::span<const int>(bits.begin(), bits.size()));
  }

  int d() const { return d_; }
  bool Get(int j) const { return GetBit(bytes_.data(), j); }
  void Set(int j, bool value) { SetBit(bytes_.data(), j, value); }
  const std::vector<uint8_t>& bytes() const { return bytes_; }
  uint8_t* mutable_data() { return bytes_.data(); }

  std::vector<int> Bits() const {
    std::vector<int> out(d_);
    for (int j = 0; j < d_; ++j) out[j] = Get(j) ? 1 : 0;
    return out;
  }

  friend bool operator==(const PrivSample&, const PrivSample&) = default;

 private:
  int d_ = 0;
  std::vector<uint8_t> bytes_;
};

class RapporChannel {
 public:
  static RapporChannel Create(int d, double alpha) {
    internal::Require(alpha > 0.0, ErrorCode::kNonPositiveAlpha,
                      "alpha must be positive");
    internal::Require(alpha <= kMaxAlpha, ErrorCode::kAlphaOutOfRange,
                      "alpha must lie in (0, 2]");
    CheckDimension(d);
    return RapporChannel(d, alpha, LambdaOfAlpha(alpha));
  }

  // Bypasses the alpha parameterization so tests can pin lambda to the
  // noiseless (0) or fully random (1/2) endpoints.
  static RapporChannel WithFlipProbabilityForTesting(int d, double lambda) {
    CheckDimension(d);
    internal::Require(lambda >= 0.0 && lambda <= 0.5,
                      ErrorCode::kInvalidArgument, "lambda must lie in [0, 1/2]");
    double alpha = std::numeric_limits<double>::infinity();
    if (lambda > 0.0) alpha = 2.0 * std::log((1.0 - lambda) / lambda);
    return RapporChannel(d, alpha, lambda);
  }

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  // The theory assumes alpha <= 1; larger budgets are allowed but flagged.
  bool alpha_exceeds_theory() const { return alpha_ > 1.0; }

  // Writes one privatized report of `x` into `packed` (PackedBytes(d) bytes).
  void PrivatizeInto(int x, Engine& engine, uint8_t* packed) const {
    for (size_t b = 0; b < PackedBytes(d_); ++b) packed[b] = 0;
    for (int j = 0; j < d_; ++j) {
      const bool flip = Bernoulli(engine, lambda_);
      SetBit(packed, j, (j == x) != flip);
    }
  }

  void CheckSymbol(int x) const {
    internal::Require(x >= 0 && x < d_, ErrorCode::kSymbolOutOfRange,
                      "symbol " + std::to_string(x) + " outside [0, " +
                          std::to_string(d_) + ")");
  }

 private:
  RapporChannel(int d, double alpha, double lambda)
      : d_(d), alpha_(alpha), lambda_(lambda) {}

  static void CheckDimension(int d) {
    internal::Require(d >= kMinAlphabet, ErrorCode::kTooSmallAlphabet,
                      "alphabet size < 3");
    internal::Require(d <= kMaxChannelDimension, ErrorCode::kDimensionTooLarge,
                      "alphabet size > 4096");
  }

  int d_;
  double alpha_;
  double lambda_;
};

inline PrivSample Privatize(const RapporChannel& ch, int x, Engine& engine) {
  ch.CheckSymbol(x);
  PrivSample z(ch.d());
  ch.PrivatizeInto(x, engine, z.mutable_data());
  return z;
}

inline PrivSample Privatize(const RapporChannel& ch, int x,
                            const RngSeed& seed) {
  Engine engine = MakeEngine(seed);
  return Privatize(ch, x, engine);
}

// Sample i is drawn from seed.Stream(seed.stream_index + i), so a batch of one
// reproduces Privatize(ch, x, seed).
inline std::vector<PrivSample> PrivatizeBatch(const RapporChannel& ch,
                                              std::span<const int> xs,
                                              const RngSeed& seed) {
  for (int x : xs) ch.CheckSymbol(x);
  std::vector<PrivSample> out;
  out.reserve(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    Engine engine = MakeEngine(seed.Stream(seed.stream_index + i));
    out.push_back(Privatize(ch, xs[i], engine));
  }
  return out;
}

inline std::vector<double> MeanResponse(const RapporChannel& ch,
                                        const ProbVector& p) {
  internal::Require(p.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "distribution and channel dimensions differ");
  const double lam = ch.lambda();
  std::vector<double> q(p.d());
  for (int j = 0; j < p.d(); ++j) q[j] = (1.0 - 2.0 * lam) * p[j] + lam;
  return q;
}

inline std::vector<double> InvertMean(const RapporChannel& ch,
                                      std::span<const double> qhat) {
  internal::Require(qhat.size() == static_cast<size_t>(ch.d()),
                    ErrorCode::kDimensionMismatch,
                    "mean vector and channel dimensions differ");
  const double lam = ch.lambda();
  std::vector<double> p(qhat.size());
  for (size_t j = 0; j < qhat.size(); ++j)
    p[j] = (qhat[j] - lam) / (1.0 - 2.0 * lam);
  return p;
}

// Draws sum_{j in S} Z(j) through its closed-form law: |S| - 1 independent
// Bernoulli(lambda) plus one Bernoulli(lambda + (1 - 2 lambda) p(S)).
inline int SubsetSumLawSample(const RapporChannel& ch, const ProbVector& p,
                              const SubsetMask& s, Engine& engine) {
  internal::Require(p.d() == ch.d() && s.d() == ch.d(),
                    ErrorCode::kDimensionMismatch, "dimension mismatch");
  const int size = s.Count();
  internal::Require(size > 0, ErrorCode::kEmptySubset, "S is empty");
  const double lam = ch.lambda();
  int sum = 0;
  for (int i = 0; i < size - 1; ++i) sum += Bernoulli(engine, lam) ? 1 : 0;
  const double top = lam + (1.0 - 2.0 * lam) * SubsetMass(p.weights(), s);
  sum += Bernoulli(engine, top) ? 1 : 0;
  return sum;
}

// Largest likelihood ratio Q(z|x) / Q(z|x') over inputs and outputs. Two inputs
// differ in at most two coordinates of the one-hot code, so the ratio is
// ((1 - lambda) / lambda)^2, found here by scanning every pattern on the two
// coordinates that can differ.
inline double LdpRatioCheck(const RapporChannel& ch) {
  const double lam = ch.lambda();
  double worst = 1.0;
  for (int zx = 0; zx <= 1; ++zx) {
    for (int zy = 0; zy <= 1; ++zy) {
      // Input x has bit pattern (1, 0) on coordinates (x, y); x' has (0, 1).
      const double px = (zx == 1 ? 1 - lam : lam) * (zy == 0 ? 1 - lam : lam);
      const double py = (zx == 0 ? 1 - lam : lam) * (zy == 1 ? 1 - lam : lam);
      worst = std::max(worst, px / py);
    }
  }
  return worst;
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_CHANNEL_H_
