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

// Batch collections and the contamination model: n' clean batches of k
// privatized reports, plus floor(n eps) adversarial batches, uniformly
// shuffled.

#ifndef LDP_ROBUST_ADVERSARY_H_
#define LDP_ROBUST_ADVERSARY_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ldp_robust/channel.h"
#include "ldp_robust/error.h"
#include "ldp_robust/lowerbound.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

enum class BatchLabel : uint8_t { kGood = 0, kAdversarial = 1 };

// n batches of k packed d-bit reports in one contiguous row-major buffer.
class BatchCollection {
 public:
  BatchCollection() = default;
  BatchCollection(int64_t n, int64_t k, int d)
      : n_(n), k_(k), d_(d),
        data_(static_cast<size_t>(n * k) * PackedBytes(d), 0) {
    internal::Require(k >= 1, ErrorCode::kEmptyBatch, "k must be >= 1");
    internal::Require(n >= 0, ErrorCode::kInvalidArgument, "n must be >= 0");
  }

  int64_t n() const { return n_; }
  int64_t k() const { return k_; }
  int d() const { return d_; }
  size_t sample_bytes() const { return PackedBytes(d_); }
  size_t batch_bytes() const { return static_cast<size_t>(k_) * sample_bytes(); }

  const uint8_t* batch_data(int64_t b) const {
    return data_.data() + static_cast<size_t>(b) * batch_bytes();
  }
  uint8_t* mutable_batch_data(int64_t b) {
    return data_.data() + static_cast<size_t>(b) * batch_bytes();
  }
  const uint8_t* sample_data(int64_t b, int64_t i) const {
    return batch_data(b) + static_cast<size_t>(i) * sample_bytes();
  }
  const std::vector<uint8_t>& raw() const { return data_; }
  std::vector<uint8_t>& mutable_raw() { return data_; }

  PrivSample Sample(int64_t b, int64_t i) const {
    PrivSample s(d_);
    std::copy_n(sample_data(b, i), sample_bytes(), s.mutable_data());
    return s;
  }

  std::vector<PrivSample> Batch(int64_t b) const {
    std::vector<PrivSample> out;
    out.reserve(static_cast<size_t>(k_));
    for (int64_t i = 0; i < k_; ++i) out.push_back(Sample(b, i));
    return out;
  }

  void SetBatch(int64_t b, std::span<const PrivSample> samples) {
    internal::Require(samples.size() == static_cast<size_t>(k_),
                      ErrorCode::kCountMismatch, "batch must hold k samples");
    for (int64_t i = 0; i < k_; ++i) {
      internal::Require(samples[i].d() == d_, ErrorCode::kDimensionMismatch,
                        "sample dimension differs from collection");
      std::copy_n(samples[i].bytes().data(), sample_bytes(),
                  mutable_batch_data(b) + i * sample_bytes());
    }
  }

  bool has_truth() const { return truth_.has_value(); }
  const std::vector<BatchLabel>& truth() const { return *truth_; }
  void set_truth(std::vector<BatchLabel> labels) {
    internal::Require(labels.size() == static_cast<size_t>(n_),
                      ErrorCode::kCountMismatch, "one label per batch");
    truth_ = std::move(labels);
  }
  void clear_truth() { truth_.reset(); }

  int64_t CountAdversarial() const {
    if (!truth_) return 0;
    return std::count(truth_->begin(), truth_->end(), BatchLabel::kAdversarial);
  }

  // Construction metadata carried by the file format.
  uint64_t eps_num = 0;
  uint64_t eps_den = 1;
  uint64_t seed = 0;

  friend bool operator==(const BatchCollection&,
                         const BatchCollection&) = default;

 private:
  int64_t n_ = 0;
  int64_t k_ = 1;
  int d_ = 0;
  std::vector<uint8_t> data_;
  std::optional<std::vector<BatchLabel>> truth_;
};

// Number of adversarial batches among n at contamination level eps. The guard
// keeps products such as 100 * 0.29 = 28.999999999999996 from losing a batch.
inline int64_t AdversarialCount(int64_t n, double eps) {
  return static_cast<int64_t>(std::floor(static_cast<double>(n) * eps + 1e-9));
}

inline void CheckEps(double eps) {
  internal::Require(eps >= 0.0 && eps < 0.25, ErrorCode::kEpsOutOfRange,
                    "eps must lie in [0, 1/4)");
}

namespace internal {

inline void FillBatchFrom(const RapporChannel& ch, const ProbVector& p,
                          int64_t k, Engine& engine, uint8_t* out) {
  const std::vector<int> xs = SampleCategorical(p, static_cast<size_t>(k),
                                                engine);
  const size_t bytes = PackedBytes(ch.d());
  for (int64_t i = 0; i < k; ++i)
    ch.PrivatizeInto(xs[i], engine, out + i * bytes);
}

}  // namespace internal

// Batch i is drawn from seed.Stream(i), independent of any scheduling.
inline BatchCollection MakeCleanCollection(const RapporChannel& ch,
                                           const ProbVector& p,
                                           int64_t n_prime, int64_t k,
                                           const RngSeed& seed) {
  internal::Require(p.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "distribution and channel dimensions differ");
  internal::Require(n_prime >= 1 && k >= 1, ErrorCode::kInvalidArgument,
                    "need n' >= 1 and k >= 1");
  BatchCollection out(n_prime, k, ch.d());
  for (int64_t b = 0; b < n_prime; ++b) {
    Engine engine = MakeEngine(seed.Stream(static_cast<uint64_t>(b)));
    internal::FillBatchFrom(ch, p, k, engine, out.mutable_batch_data(b));
  }
  out.set_truth(std::vector<BatchLabel>(n_prime, BatchLabel::kGood));
  out.seed = seed.seed;
  return out;
}

struct AllOnesAttack {};
struct AllZerosAttack {};
struct SwapDistributionAttack {
  ProbVector q;
};
struct TargetedSubsetAttack {
  SubsetMask subset;
  int direction = 1;  // +1 forces bits up, -1 forces them down
  double magnitude = 1.0;
};
struct HardPairSwapAttack {
  HardPair pair;
};

using AttackSpec = std::variant<AllOnesAttack, AllZerosAttack,
                                SwapDistributionAttack, TargetedSubsetAttack,
                                HardPairSwapAttack>;

inline void ValidateAttack(const AttackSpec& attack, const RapporChannel& ch) {
  using internal::Require;
  if (const auto* s = std::get_if<SwapDistributionAttack>(&attack)) {
    Require(s->q.d() == ch.d(), ErrorCode::kInvalidAttackParams,
            "swap distribution has the wrong dimension");
  } else if (const auto* t = std::get_if<TargetedSubsetAttack>(&attack)) {
    Require(t->subset.d() == ch.d(), ErrorCode::kInvalidAttackParams,
            "target subset has the wrong dimension");
    Require(t->direction == 1 || t->direction == -1,
            ErrorCode::kInvalidAttackParams, "direction must be +1 or -1");
    Require(t->magnitude >= 0.0 && t->magnitude <= 1.0,
            ErrorCode::kInvalidAttackParams, "magnitude must lie in [0, 1]");
  } else if (const auto* h = std::get_if<HardPairSwapAttack>(&attack)) {
    Require(h->pair.q.d() == ch.d(), ErrorCode::kInvalidAttackParams,
            "hard pair has the wrong dimension");
  }
}

// Writes one adversarial batch of k reports into `out`.
inline void AttackBatchInto(const AttackSpec& attack, const RapporChannel& ch,
                            int64_t k, Engine& engine, uint8_t* out) {
  const int d = ch.d();
  const size_t bytes = PackedBytes(d);
  if (std::holds_alternative<AllOnesAttack>(attack) ||
      std::holds_alternative<AllZerosAttack>(attack)) {
    const bool one = std::holds_alternative<AllOnesAttack>(attack);
    std::fill_n(out, static_cast<size_t>(k) * bytes, uint8_t{0});
    if (one) {
      for (int64_t i = 0; i < k; ++i)
        for (int j = 0; j < d; ++j) SetBit(out + i * bytes, j, true);
    }
  } else if (const auto* s = std::get_if<SwapDistributionAttack>(&attack)) {
    internal::FillBatchFrom(ch, s->q, k, engine, out);
  } else if (const auto* h = std::get_if<HardPairSwapAttack>(&attack)) {
    internal::FillBatchFrom(ch, h->pair.q, k, engine, out);
  } else {
    const auto& t = std::get<TargetedSubsetAttack>(attack);
    internal::FillBatchFrom(ch, ProbVector::Uniform(d), k, engine, out);
    const bool forced = t.direction > 0;
    for (int64_t i = 0; i < k; ++i) {
      for (int j = 0; j < d; ++j) {
        if (t.subset.Contains(j) && Bernoulli(engine, t.magnitude))
          SetBit(out + i * bytes, j, forced);
      }
    }
  }
}

inline std::vector<PrivSample> AttackBatch(const AttackSpec& attack,
                                           const RapporChannel& ch, int64_t k,
                                           const RngSeed& seed) {
  ValidateAttack(attack, ch);
  internal::Require(k >= 1, ErrorCode::kInvalidAttackParams, "k must be >= 1");
  Engine engine = MakeEngine(seed);
  const size_t bytes = PackedBytes(ch.d());
  std::vector<uint8_t> buffer(static_cast<size_t>(k) * bytes);
  AttackBatchInto(attack, ch, k, engine, buffer.data());
  std::vector<PrivSample> out;
  for (int64_t i = 0; i < k; ++i) {
    PrivSample z(ch.d());
    std::copy_n(buffer.data() + i * bytes, bytes, z.mutable_data());
    out.push_back(std::move(z));
  }
  return out;
}

// Appends floor(n eps) adversarial batches (batch a from seed.Child(1)
// .Stream(a)) and shuffles all n uniformly with seed.Child(2). Truth labels
// follow their batches.
inline BatchCollection Contaminate(const BatchCollection& clean,
                                   const AttackSpec& attack, double eps,
                                   int64_t n, const RapporChannel& ch,
                                   const RngSeed& seed) {
  CheckEps(eps);
  internal::Require(clean.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "collection and channel dimensions differ");
  ValidateAttack(attack, ch);
  const int64_t n_adv = AdversarialCount(n, eps);
  internal::Require(clean.n() == n - n_adv, ErrorCode::kCountMismatch,
                    "clean collection has " + std::to_string(clean.n()) +
                        " batches, expected " + std::to_string(n - n_adv));
  const int64_t k = clean.k();
  BatchCollection staged(n, k, ch.d());
  std::copy(clean.raw().begin(), clean.raw().end(),
            staged.mutable_raw().begin());
  const RngSeed adv_root = seed.Child(1);
  for (int64_t a = 0; a < n_adv; ++a) {
    Engine engine = MakeEngine(adv_root.Stream(static_cast<uint64_t>(a)));
    AttackBatchInto(attack, ch, k, engine,
                    staged.mutable_batch_data(clean.n() + a));
  }
  std::vector<BatchLabel> labels(static_cast<size_t>(n), BatchLabel::kGood);
  if (clean.has_truth())
    std::copy(clean.truth().begin(), clean.truth().end(), labels.begin());
  std::fill(labels.begin() + clean.n(), labels.end(), BatchLabel::kAdversarial);

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), int64_t{0});
  Engine shuffler = MakeEngine(seed.Child(2));
  std::shuffle(order.begin(), order.end(), shuffler);

  BatchCollection out(n, k, ch.d());
  std::vector<BatchLabel> out_labels(static_cast<size_t>(n));
  for (int64_t b = 0; b < n; ++b) {
    std::copy_n(staged.batch_data(order[b]), staged.batch_bytes(),
                out.mutable_batch_data(b));
    out_labels[b] = labels[order[b]];
  }
  out.set_truth(std::move(out_labels));
  out.eps_num = static_cast<uint64_t>(n_adv);
  out.eps_den = static_cast<uint64_t>(std::max<int64_t>(n, 1));
  out.seed = seed.seed;
  return out;
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_ADVERSARY_H_
