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

// Probability vectors over [d], finite distributions, divergences and
// subset-mass helpers. Symbols are 0-based throughout the library.

#ifndef LDP_ROBUST_PROB_H_
#define LDP_ROBUST_PROB_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldp_robust/error.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

inline constexpr double kConstructionTolerance = 1e-9;
inline constexpr double kInvariantTolerance = 1e-12;
inline constexpr int kMinAlphabet = 3;

class ProbVector {
 public:
  // Validates and stores `weights`. Entries in [-1e-12, 0) are clamped to 0
  // and the vector is renormalized when its sum is within 1e-9 of 1.
  static ProbVector Make(std::span<const double> weights) {
    internal::Require(weights.size() >= static_cast<size_t>(kMinAlphabet),
                      ErrorCode::kTooSmallAlphabet,
                      "alphabet size " + std::to_string(weights.size()) +
                          " < 3");
    std::vector<double> w(weights.begin(), weights.end());
    for (double& x : w) {
      internal::Require(std::isfinite(x) && x >= -kInvariantTolerance,
                        ErrorCode::kNegativeMass,
                        "entry " + std::to_string(x) + " is negative");
      x = std::max(x, 0.0);
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    internal::Require(std::abs(sum - 1.0) <= kConstructionTolerance,
                      ErrorCode::kNotNormalized,
                      "weights sum to " + std::to_string(sum));
    for (double& x : w) x /= sum;
    return ProbVector(std::move(w));
  }

  static ProbVector Make(std::initializer_list<double> weights) {
    return Make(std::span<const double>(weights.begin(), weights.size()));
  }

  static ProbVector Uniform(int d) {
    internal::Require(d >= kMinAlphabet, ErrorCode::kTooSmallAlphabet,
                      "alphabet size < 3");
    return ProbVector(std::vector<double>(d, 1.0 / d));
  }

  static ProbVector PointMass(int d, int symbol) {
    internal::Require(d >= kMinAlphabet, ErrorCode::kTooSmallAlphabet,
                      "alphabet size < 3");
    internal::Require(symbol >= 0 && symbol < d, ErrorCode::kSymbolOutOfRange,
                      "symbol out of range");
    std::vector<double> w(d, 0.0);
    w[symbol] = 1.0;
    return ProbVector(std::move(w));
  }

  int d() const { return static_cast<int>(w_.size()); }
  double operator[](size_t j) const { return w_[j]; }
  const std::vector<double>& weights() const { return w_; }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  explicit ProbVector(std::vector<double> w) : w_(std::move(w)) {}
  std::vector<double> w_;
};

// Membership indicator of a subset S of [d].
class SubsetMask {
 public:
  SubsetMask() = default;
  explicit SubsetMask(int d) : bits_(d, false) {}

  static SubsetMask FromIndices(int d, std::span<const int> members) {
    SubsetMask s(d);
    for (int j : members) {
      internal::Require(j >= 0 && j < d, ErrorCode::kSymbolOutOfRange,
                        "subset member out of range");
      s.bits_[j] = true;
    }
    return s;
  }
  static SubsetMask FromIndices(int d, std::initializer_list<int> members) {
    return FromIndices(d, std::span<const int>(members.begin(), members.size()));
  }

  // Bit j of `mask` is membership of symbol j; requires d <= 64.
  static SubsetMask FromBits(int d, uint64_t mask) {
    SubsetMask s(d);
    for (int j = 0; j < d; ++j) s.bits_[j] = ((mask >> j) & 1u) != 0;
    return s;
  }

  static SubsetMask Full(int d) {
    SubsetMask s(d);
    s.bits_.assign(d, true);
    return s;
  }

  int d() const { return static_cast<int>(bits_.size()); }
  bool Contains(int j) const { return bits_[j]; }
  void Set(int j, bool member = true) { bits_[j] = member; }

  int Count() const {
    return static_cast<int>(std::count(bits_.begin(), bits_.end(), true));
  }

  std::vector<int> Indices() const {
    std::vector<int> out;
    for (int j = 0; j < d(); ++j)
      if (bits_[j]) out.push_back(j);
    return out;
  }

  SubsetMask Complement() const {
    SubsetMask s(d());
    for (int j = 0; j < d(); ++j) s.bits_[j] = !bits_[j];
    return s;
  }

  uint64_t ToBits() const {
    uint64_t m = 0;
    for (int j = 0; j < d() && j < 64; ++j)
      if (bits_[j]) m |= uint64_t{1} << j;
    return m;
  }

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;

 private:
  std::vector<bool> bits_;
};

// A distribution over opaque 64-bit outcome identifiers.
class FiniteDist {
 public:
  // Masses may dip to -1e-12 (rounding in constructed measures) and must sum
  // to 1 within 1e-10.
  static FiniteDist Make(std::vector<uint64_t> outcomes,
                         std::vector<double> masses) {
    internal::Require(outcomes.size() == masses.size(),
                      ErrorCode::kLengthMismatch,
                      "outcomes and masses differ in length");
    double sum = 0.0;
    for (double m : masses) {
      internal::Require(std::isfinite(m) && m >= -kInvariantTolerance,
                        ErrorCode::kNegativeMass,
                        "mass " + std::to_string(m) + " is negative");
      sum += m;
    }
    internal::Require(std::abs(sum - 1.0) <= 1e-10, ErrorCode::kNotNormalized,
                      "masses sum to " + std::to_string(sum));
    std::vector<uint64_t> sorted = outcomes;
    std::sort(sorted.begin(), sorted.end());
    internal::Require(
        std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
        ErrorCode::kInvalidArgument, "outcomes are not distinct");
    return FiniteDist(std::move(outcomes), std::move(masses));
  }

  static FiniteDist FromProbVector(const ProbVector& p) {
    std::vector<uint64_t> ids(p.d());
    std::iota(ids.begin(), ids.end(), uint64_t{0});
    return FiniteDist(std::move(ids), p.weights());
  }

  size_t size() const { return masses_.size(); }
  const std::vector<uint64_t>& outcomes() const { return outcomes_; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  FiniteDist(std::vector<uint64_t> o, std::vector<double> m)
      : outcomes_(std::move(o)), masses_(std::move(m)) {}

  std::vector<uint64_t> outcomes_;
  std::vector<double> masses_;
};

namespace internal {

inline void RequireSameLength(size_t a, size_t b) {
  Require(a == b, ErrorCode::kLengthMismatch,
          "lengths " + std::to_string(a) + " and " + std::to_string(b) +
              " differ");
}

// Masses of `q` reordered to match the outcome order of `p`.
inline std::vector<double> AlignedMasses(const FiniteDist& p,
                                         const FiniteDist& q) {
  Require(p.size() == q.size(), ErrorCode::kOutcomeMismatch,
          "outcome sets differ in size");
  if (p.outcomes() == q.outcomes()) return q.masses();
  std::vector<size_t> order(q.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return q.outcomes()[a] < q.outcomes()[b];
  });
  std::vector<double> out(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const uint64_t id = p.outcomes()[i];
    auto it = std::lower_bound(
        order.begin(), order.end(), id,
        [&](size_t idx, uint64_t v) { return q.outcomes()[idx] < v; });
    Require(it != order.end() && q.outcomes()[*it] == id,
            ErrorCode::kOutcomeMismatch, "outcome sets differ");
    out[i] = q.masses()[*it];
  }
  return out;
}

}  // namespace internal

inline double L1Dist(std::span<const double> p, std::span<const double> q) {
  internal::RequireSameLength(p.size(), q.size());
  double s = 0.0;
  for (size_t j = 0; j < p.size(); ++j) s += std::abs(p[j] - q[j]);
  return s;
}

inline double L1Dist(const ProbVector& p, const ProbVector& q) {
  return L1Dist(p.weights(), q.weights());
}

inline double Tv(const FiniteDist& p, const FiniteDist& q) {
  const std::vector<double> qm = internal::AlignedMasses(p, q);
  return 0.5 * L1Dist(p.masses(), qm);
}

inline double Tv(const ProbVector& p, const ProbVector& q) {
  return 0.5 * L1Dist(p.weights(), q.weights());
}

// Sum of (p - q)^2 / q; +infinity when p is not absolutely continuous with
// respect to q.
inline double ChiSquare(const FiniteDist& p, const FiniteDist& q) {
  const std::vector<double> qm = internal::AlignedMasses(p, q);
  double s = 0.0;
  for (size_t i = 0; i < qm.size(); ++i) {
    const double pi = p.masses()[i];
    if (qm[i] <= 0.0) {
      if (pi > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double diff = pi - qm[i];
    s += diff * diff / qm[i];
  }
  return s;
}

inline double SubsetMass(std::span<const double> v, const SubsetMask& s) {
  internal::RequireSameLength(v.size(), static_cast<size_t>(s.d()));
  double m = 0.0;
  for (size_t j = 0; j < v.size(); ++j)
    if (s.Contains(static_cast<int>(j))) m += v[j];
  return m;
}

struct SubsetGap {
  double value = 0.0;
  SubsetMask witness;
};

// max over S of |p(S) - v(S)| in O(d). The optimum is attained by the set of
// coordinates where p strictly exceeds v, or its complement; ties go to the
// former.
inline SubsetGap SupSubsetGap(const ProbVector& p, std::span<const double> v) {
  internal::RequireSameLength(static_cast<size_t>(p.d()), v.size());
  SubsetMask above(p.d());
  double pos = 0.0, neg = 0.0;
  for (int j = 0; j < p.d(); ++j) {
    const double diff = p[j] - v[j];
    if (diff > 0.0) {
      above.Set(j);
      pos += diff;
    } else {
      neg -= diff;
    }
  }
  if (pos >= neg) return {pos, std::move(above)};
  return {neg, above.Complement()};
}

inline std::vector<int> SampleCategorical(const ProbVector& p, size_t count,
                                          Engine& engine) {
  std::vector<double> cdf(p.d());
  std::partial_sum(p.weights().begin(), p.weights().end(), cdf.begin());
  int last = p.d() - 1;
  while (last > 0 && p[last] == 0.0) --last;
  std::vector<int> out(count);
  for (size_t i = 0; i < count; ++i) {
    const double u = UniformUnit(engine) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[i] = std::min(static_cast<int>(it - cdf.begin()), last);
  }
  return out;
}

inline std::vector<int> SampleCategorical(const ProbVector& p, size_t count,
                                          const RngSeed& seed) {
  Engine engine = MakeEngine(seed);
  return SampleCategorical(p, count, engine);
}

// Upper bound on TV between k-fold products from the one-sample chi-square:
// sqrt((1 + chi2)^k - 1), clamped to 1.
inline double TvProductBound(double chi2_single, int k) {
  internal::Require(chi2_single >= 0.0 && k >= 1, ErrorCode::kInvalidArgument,
                    "need chi2 >= 0 and k >= 1");
  if (!std::isfinite(chi2_single)) return 1.0;
  const double excess = std::expm1(k * std::log1p(chi2_single));
  return std::min(1.0, std::sqrt(excess));
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_PROB_H_
