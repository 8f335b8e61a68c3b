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

// The robust filtering estimator. Each round compares the empirical
// covariance of batch means with the covariance a clean collection would
// have, scores every batch by its alignment with the worst direction found by
// the Gram relaxation, and randomly deletes high-score batches until the
// discrepancy is small enough.

#ifndef LDP_ROBUST_ESTIMATOR_H_
#define LDP_ROBUST_ESTIMATOR_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldp_robust/adversary.h"
#include "ldp_robust/channel.h"
#include "ldp_robust/error.h"
#include "ldp_robust/gram.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

inline constexpr double kDefaultTauThreshold = 200.0;
inline constexpr double kDefaultSpecialGapThreshold = 11.0;
inline constexpr int kMaxEnumeratedSubsetDimension = 12;

struct EstimatorConfig {
  double eps = 0.0;
  double tau_threshold = kDefaultTauThreshold;  // compared against sqrt(tau)
  double special_gap_threshold = kDefaultSpecialGapThreshold;
  GramOptions sdp;
  int64_t max_iterations = 0;  // 0 means the number of batches

  void Validate() const {
    CheckEps(eps);
    internal::Require(tau_threshold > 0.0 && special_gap_threshold > 0.0,
                      ErrorCode::kInvalidConfig, "thresholds must be positive");
    internal::Require(max_iterations >= 0, ErrorCode::kInvalidConfig,
                      "max_iterations must be >= 0");
  }
};

// ln(e / eps), the logarithmic factor used by every rate threshold.
inline double LogEOverEps(double eps) { return 1.0 - std::log(eps); }

// max_S |a(S) - b(S)|, attained by a sign split.
inline double SupSubsetError(std::span<const double> a,
                             std::span<const double> b) {
  internal::Require(a.size() == b.size(), ErrorCode::kLengthMismatch,
                    "lengths differ");
  double pos = 0.0, neg = 0.0;
  for (size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    if (diff > 0.0) {
      pos += diff;
    } else {
      neg -= diff;
    }
  }
  return std::max(pos, neg);
}

inline std::vector<double> BatchMean(std::span<const PrivSample> batch) {
  internal::Require(!batch.empty(), ErrorCode::kEmptyBatch, "batch is empty");
  const int d = batch[0].d();
  std::vector<double> mean(d, 0.0);
  for (const PrivSample& z : batch) {
    internal::Require(z.d() == d, ErrorCode::kDimensionMismatch,
                      "samples differ in dimension");
    for (int j = 0; j < d; ++j) mean[j] += z.Get(j) ? 1.0 : 0.0;
  }
  for (double& m : mean) m /= static_cast<double>(batch.size());
  return mean;
}

// Row b is the mean of batch b.
inline Eigen::MatrixXd BatchMeans(const BatchCollection& c) {
  const int d = c.d();
  Eigen::MatrixXd means(c.n(), d);
  std::vector<int64_t> counts(d);
  const size_t bytes = c.sample_bytes();
  for (int64_t b = 0; b < c.n(); ++b) {
    std::fill(counts.begin(), counts.end(), 0);
    const uint8_t* data = c.batch_data(b);
    for (int64_t i = 0; i < c.k(); ++i) {
      const uint8_t* z = data + i * bytes;
      for (size_t byte = 0; byte < bytes; ++byte) {
        unsigned bits = z[byte];
        while (bits != 0) {
          const int j = static_cast<int>(byte * 8) + std::countr_zero(bits);
          if (j < d) ++counts[j];
          bits &= bits - 1;
        }
      }
    }
    for (int j = 0; j < d; ++j)
      means(b, j) = static_cast<double>(counts[j]) / static_cast<double>(c.k());
  }
  return means;
}

inline Eigen::VectorXd CollectionMean(const Eigen::MatrixXd& means,
                                      std::span<const int64_t> selection) {
  internal::Require(!selection.empty(), ErrorCode::kEmptySelection,
                    "selection is empty");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(means.cols());
  for (int64_t b : selection) sum += means.row(b).transpose();
  return sum / static_cast<double>(selection.size());
}

inline std::vector<int64_t> AllIndices(int64_t n) {
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  return idx;
}

inline std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// k C(q) = -(lambda 1 - q)(lambda 1 - q)^T + lambda (1 - lambda) I
//          - (1 - 2 lambda) Diag(lambda 1 - q),
// the covariance of one batch mean of k reports with coordinate means q.
inline SymMatrix ModelCov(std::span<const double> qhat, int64_t k,
                          double lambda) {
  internal::Require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1");
  const int d = static_cast<int>(qhat.size());
  Eigen::VectorXd delta(d);
  for (int j = 0; j < d; ++j) delta[j] = lambda - qhat[j];
  Eigen::MatrixXd c = -delta * delta.transpose();
  for (int j = 0; j < d; ++j)
    c(j, j) += lambda * (1.0 - lambda) - (1.0 - 2.0 * lambda) * delta[j];
  return SymMatrix::Make(c / static_cast<double>(k));
}

struct CovBundle {
  Eigen::VectorXd qhat_col;
  Eigen::MatrixXd centered;  // row i: qhat_b - qhat_col for the i-th selected b
  SymMatrix chat = SymMatrix::Make(Eigen::MatrixXd());
  SymMatrix cmodel = SymMatrix::Make(Eigen::MatrixXd());
  SymMatrix d_matrix = SymMatrix::Make(Eigen::MatrixXd());

  Eigen::MatrixXd ChatB(int64_t i) const {
    return centered.row(i).transpose() * centered.row(i);
  }
};

// Empirical covariance of the selected batch means (average of the per-batch
// outer products), the model covariance at their mean, and the difference.
inline CovBundle EmpiricalCov(const Eigen::MatrixXd& means,
                              std::span<const int64_t> selection, int64_t k,
                              double lambda) {
  internal::Require(selection.size() >= 2, ErrorCode::kTooFewBatches,
                    "need at least two batches");
  CovBundle out;
  out.qhat_col = CollectionMean(means, selection);
  const auto m = static_cast<Eigen::Index>(selection.size());
  out.centered.resize(m, means.cols());
  for (Eigen::Index i = 0; i < m; ++i)
    out.centered.row(i) = means.row(selection[i]) - out.qhat_col.transpose();
  out.chat = SymMatrix::Symmetrize(out.centered.transpose() * out.centered /
                                   static_cast<double>(m));
  out.cmodel = ModelCov(ToStd(out.qhat_col), k, lambda);
  out.d_matrix = SymMatrix::Symmetrize(out.chat.matrix() -
                                       out.cmodel.matrix());
  return out;
}

struct SpecialSubsetResult {
  SubsetMask s_star;
  double gap = 0.0;
};

// The better of A = {j : qhat_j >= lambda} and its complement for
// |qhat(S) - lambda |S||, ties to A.
inline SpecialSubsetResult SpecialSubset(std::span<const double> qhat,
                                         double lambda) {
  const int d = static_cast<int>(qhat.size());
  SubsetMask a(d);
  double in = 0.0, out = 0.0;
  for (int j = 0; j < d; ++j) {
    if (qhat[j] >= lambda) {
      a.Set(j);
      in += qhat[j] - lambda;
    } else {
      out += qhat[j] - lambda;
    }
  }
  if (std::abs(in) >= std::abs(out)) return {a, std::abs(in)};
  return {a.Complement(), std::abs(out)};
}

enum class ScoreMode { kSpecial, kSdp };

inline const char* ScoreModeName(ScoreMode m) {
  return m == ScoreMode::kSpecial ? "special" : "sdp";
}

struct ScoreReport {
  ScoreMode mode = ScoreMode::kSdp;
  double tau = 0.0;  // +infinity in special mode
  double special_gap = 0.0;
  std::vector<double> scores;  // aligned with the selection
  SubsetMask s_star;           // special mode only
  GramSolution gram;           // sdp mode only

  double sqrt_tau() const {
    if (std::isinf(tau)) return tau;
    return std::sqrt(std::max(tau, 0.0));
  }
};

// Scores the selected batches. `seed` drives the Gram restarts.
inline ScoreReport ScoreCollection(const Eigen::MatrixXd& means,
                                   std::span<const int64_t> selection,
                                   int64_t k, const EstimatorConfig& cfg,
                                   const RapporChannel& ch,
                                   const RngSeed& seed) {
  internal::Require(selection.size() >= 2, ErrorCode::kTooFewBatches,
                    "need at least two batches");
  internal::Require(means.cols() == ch.d(), ErrorCode::kDimensionMismatch,
                    "means and channel dimensions differ");
  const double lam = ch.lambda();
  const int d = ch.d();
  ScoreReport report;
  const Eigen::VectorXd qhat = CollectionMean(means, selection);
  SpecialSubsetResult special = SpecialSubset(ToStd(qhat), lam);
  report.special_gap = special.gap;
  if (special.gap >= cfg.special_gap_threshold) {
    report.mode = ScoreMode::kSpecial;
    report.tau = std::numeric_limits<double>::infinity();
    const double offset = lam * special.s_star.Count();
    report.scores.reserve(selection.size());
    for (int64_t b : selection) {
      double mass = 0.0;
      for (int j = 0; j < d; ++j)
        if (special.s_star.Contains(j)) mass += means(b, j);
      report.scores.push_back(std::abs(mass - offset));
    }
    report.s_star = std::move(special.s_star);
    return report;
  }
  internal::Require(cfg.eps > 0.0, ErrorCode::kEpsOutOfRange,
                    "scoring by the Gram relaxation needs eps > 0");
  const CovBundle bundle = EmpiricalCov(means, selection, k, lam);
  report.mode = ScoreMode::kSdp;
  report.gram = GramMaximize(bundle.d_matrix, cfg.sdp, seed);
  report.tau = report.gram.value * static_cast<double>(k) /
               (cfg.eps * d * LogEOverEps(cfg.eps));
  // <U V^T, c c^T> = (U^T c) . (V^T c)
  const Eigen::MatrixXd cu = bundle.centered * report.gram.u;
  const Eigen::MatrixXd cv = bundle.centered * report.gram.v;
  report.scores.resize(selection.size());
  for (Eigen::Index i = 0; i < cu.rows(); ++i)
    report.scores[i] = std::abs(cu.row(i).dot(cv.row(i)));
  return report;
}

// Weighted sampling without replacement from `scores` (positions are local
// indices). Deletes while the remaining score mass exceeds half the initial
// total.
inline std::vector<size_t> BatchDeletion(std::span<const double> scores,
                                         Engine& engine) {
  internal::Require(!scores.empty(), ErrorCode::kEmptySelection,
                    "no batches to delete from");
  double total = 0.0;
  for (double s : scores) {
    internal::Require(s >= 0.0 && std::isfinite(s), ErrorCode::kInvalidArgument,
                      "scores must be finite and nonnegative");
    total += s;
  }
  internal::Require(total > 0.0, ErrorCode::kAllZeroScores,
                    "all scores are zero");
  std::vector<bool> deleted(scores.size(), false);
  std::vector<size_t> out;
  auto remaining = [&] {
    double r = 0.0;
    for (size_t i = 0; i < scores.size(); ++i)
      if (!deleted[i]) r += scores[i];
    return r;
  };
  for (double left = total; left > total / 2.0; left = remaining()) {
    const double u = UniformUnit(engine) * left;
    double acc = 0.0;
    size_t pick = scores.size();
    for (size_t i = 0; i < scores.size(); ++i) {
      if (deleted[i] || scores[i] <= 0.0) continue;
      pick = i;  // the last positive weight absorbs rounding at the top end
      acc += scores[i];
      if (u < acc) break;
    }
    deleted[pick] = true;
    out.push_back(pick);
  }
  return out;
}

// FNV-1a over the raw bytes of batch b.
inline uint64_t BatchContentHash(const BatchCollection& c, int64_t b) {
  uint64_t h = 14695981039346656037ull;
  const uint8_t* data = c.batch_data(b);
  for (size_t i = 0; i < c.batch_bytes(); ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

struct TraceEntry {
  ScoreMode mode = ScoreMode::kSdp;
  double tau = 0.0;
  double sqrt_tau = 0.0;
  std::vector<int64_t> deleted;  // collection indices
};

struct EstimateResult {
  std::vector<double> qhat;
  std::vector<double> phat;
  std::vector<double> phat_normalized;
  std::vector<int64_t> surviving;
  std::vector<TraceEntry> trace;

  int64_t iterations() const {
    int64_t it = 0;
    for (const TraceEntry& e : trace) it += e.deleted.empty() ? 0 : 1;
    return it;
  }
  double final_tau() const { return trace.empty() ? 0.0 : trace.back().tau; }
};

namespace internal {

inline EstimateResult FinishEstimate(const Eigen::MatrixXd& means,
                                     std::vector<int64_t> surviving,
                                     const RapporChannel& ch) {
  EstimateResult r;
  r.qhat = ToStd(CollectionMean(means, surviving));
  r.phat = InvertMean(ch, r.qhat);
  double l1 = 0.0;
  for (double x : r.phat) l1 += std::abs(x);
  r.phat_normalized = r.phat;
  if (l1 > 1e-9)
    for (double& x : r.phat_normalized) x /= l1;
  r.surviving = std::move(surviving);
  return r;
}

}  // namespace internal

// Mean over every batch, inverted through the channel.
inline EstimateResult NaiveEstimate(const BatchCollection& c,
                                    const RapporChannel& ch) {
  internal::Require(c.n() >= 1, ErrorCode::kEmptySelection, "no batches");
  internal::Require(c.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "collection and channel dimensions differ");
  return internal::FinishEstimate(BatchMeans(c), AllIndices(c.n()), ch);
}

// Round t scores the surviving batches (Gram restarts from seed.Child(2t+1)),
// stops once sqrt(tau) < cfg.tau_threshold, and otherwise deletes from the
// max(1, floor(eps n)) top-scored batches, visited in content-hash order with
// randomness from seed.Child(2t+2).
inline EstimateResult RobustEstimate(const BatchCollection& c,
                                     const EstimatorConfig& cfg,
                                     const RapporChannel& ch,
                                     const RngSeed& seed) {
  cfg.Validate();
  internal::Require(c.n() >= 2, ErrorCode::kTooFewBatches,
                    "need at least two batches");
  internal::Require(c.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "collection and channel dimensions differ");
  const Eigen::MatrixXd means = BatchMeans(c);
  std::vector<int64_t> surviving = AllIndices(c.n());
  if (cfg.eps == 0.0) return internal::FinishEstimate(means, surviving, ch);

  const int64_t cap = cfg.max_iterations > 0 ? cfg.max_iterations : c.n();
  const auto top_size = std::max<int64_t>(
      1, static_cast<int64_t>(std::floor(cfg.eps * c.n() + 1e-9)));
  std::vector<uint64_t> hashes(static_cast<size_t>(c.n()));
  for (int64_t b = 0; b < c.n(); ++b) hashes[b] = BatchContentHash(c, b);

  std::vector<TraceEntry> trace;
  for (uint64_t round = 0;; ++round) {
    internal::Require(static_cast<int64_t>(round) < cap,
                      ErrorCode::kIterationCap,
                      "no convergence within " + std::to_string(cap) +
                          " rounds");
    const ScoreReport report = ScoreCollection(
        means, surviving, c.k(), cfg, ch, seed.Child(2 * round + 1));
    TraceEntry entry{report.mode, report.tau, report.sqrt_tau(), {}};
    if (entry.sqrt_tau < cfg.tau_threshold) {
      trace.push_back(std::move(entry));
      break;
    }
    std::vector<size_t> order(surviving.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const size_t m = std::min(order.size(), static_cast<size_t>(top_size));
    std::partial_sort(order.begin(), order.begin() + m, order.end(),
                      [&](size_t a, size_t b) {
                        if (report.scores[a] != report.scores[b])
                          return report.scores[a] > report.scores[b];
                        return surviving[a] < surviving[b];
                      });
    order.resize(m);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      const uint64_t ha = hashes[surviving[a]], hb = hashes[surviving[b]];
      if (ha != hb) return ha < hb;
      return surviving[a] < surviving[b];
    });
    std::vector<double> top_scores(m);
    double total = 0.0;
    for (size_t i = 0; i < m; ++i) {
      top_scores[i] = report.scores[order[i]];
      total += top_scores[i];
    }
    if (total <= 0.0) {
      trace.push_back(std::move(entry));
      break;
    }
    Engine engine = MakeEngine(seed.Child(2 * round + 2));
    std::vector<bool> drop(surviving.size(), false);
    for (size_t pos : BatchDeletion(top_scores, engine)) {
      drop[order[pos]] = true;
      entry.deleted.push_back(surviving[order[pos]]);
    }
    std::vector<int64_t> kept;
    kept.reserve(surviving.size());
    for (size_t i = 0; i < surviving.size(); ++i)
      if (!drop[i]) kept.push_back(surviving[i]);
    surviving = std::move(kept);
    trace.push_back(std::move(entry));
    internal::Require(surviving.size() >= 2, ErrorCode::kExhausted,
                      "fewer than two batches survive");
  }
  EstimateResult result = internal::FinishEstimate(means, surviving, ch);
  result.trace = std::move(trace);
  return result;
}

// Key-value text record, one `key=value` per line, reals with 17 digits.
inline std::string SerializeEstimate(const EstimateResult& r) {
  auto real = [](double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  auto vec = [&](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + real(v[i]);
    return s;
  };
  std::ostringstream out;
  out << "qhat=" << vec(r.qhat) << "\n";
  out << "phat=" << vec(r.phat) << "\n";
  out << "phat_normalized=" << vec(r.phat_normalized) << "\n";
  out << "surviving_count=" << r.surviving.size() << "\n";
  out << "iterations=" << r.iterations() << "\n";
  out << "trace_length=" << r.trace.size() << "\n";
  for (size_t t = 0; t < r.trace.size(); ++t) {
    const TraceEntry& e = r.trace[t];
    out << "trace." << t << ".mode=" << ScoreModeName(e.mode) << "\n";
    out << "trace." << t << ".tau=" << real(e.tau) << "\n";
    out << "trace." << t << ".deleted=";
    for (size_t i = 0; i < e.deleted.size(); ++i)
      out << (i ? "," : "") << e.deleted[i];
    out << "\n";
  }
  return out.str();
}

struct NicePropertiesOptions {
  int random_subcollections = 20;
};

struct NicePropertiesReport {
  double first_moment_worst = 0.0;
  double first_moment_bound = 0.0;
  double second_moment_worst = 0.0;
  double second_moment_bound = 0.0;
  double condition2_worst = 0.0;
  double condition2_bound = 0.0;

  bool first_moment_ok() const {
    return first_moment_worst <= first_moment_bound;
  }
  bool second_moment_ok() const {
    return second_moment_worst <= second_moment_bound;
  }
  bool condition1_ok() const { return first_moment_ok() && second_moment_ok(); }
  bool condition2_ok() const { return condition2_worst <= condition2_bound; }
  bool ok() const { return condition1_ok() && condition2_ok(); }
};

// Evaluates the concentration conditions on an all-good collection.
//
// First moment: for each S, the extreme sub-collection means drop the r
// smallest or r largest values of qhat_b(S), r <= floor(2 eps n); scanned
// exactly. Second moment: the full collection plus random sub-collections of
// size n - floor(2 eps n), each maximized exactly over (S, S'). Condition 2:
// by Cauchy-Schwarz the worst (S, S') pair is a diagonal one, whose worst
// sub-collection is the floor(eps n) largest squares; scanned exactly.
inline NicePropertiesReport CheckNiceProperties(
    const BatchCollection& clean, const ProbVector& p_true, double eps,
    const RapporChannel& ch, const RngSeed& seed,
    const NicePropertiesOptions& opts = {}) {
  const int d = ch.d();
  internal::Require(d <= kMaxEnumeratedSubsetDimension,
                    ErrorCode::kDimensionTooLarge,
                    "subset enumeration needs d <= 12");
  internal::Require(eps > 0.0 && eps < 0.25, ErrorCode::kEpsOutOfRange,
                    "eps must lie in (0, 1/4)");
  internal::Require(!clean.has_truth() || clean.CountAdversarial() == 0,
                    ErrorCode::kInvalidArgument,
                    "collection contains adversarial batches");
  internal::Require(clean.n() >= 2, ErrorCode::kTooFewBatches,
                    "need at least two batches");
  const int64_t n = clean.n();
  const double k = static_cast<double>(clean.k());
  const double log_term = LogEOverEps(eps);
  const Eigen::MatrixXd means = BatchMeans(clean);
  const std::vector<double> q = MeanResponse(ch, p_true);

  NicePropertiesReport r;
  r.first_moment_bound = 6.0 * eps * std::sqrt(d * log_term / k);
  r.second_moment_bound = 250.0 * d * eps * log_term / k;
  r.condition2_bound = 33.0 * eps * d * static_cast<double>(n) * log_term / k;

  const auto trim = static_cast<int64_t>(std::floor(2.0 * eps * n + 1e-9));
  const auto small = static_cast<int64_t>(std::floor(eps * n + 1e-9));
  std::vector<double> x(static_cast<size_t>(n));
  for (uint32_t mask = 1; mask < (uint32_t{1} << d); ++mask) {
    double q_s = 0.0;
    for (int j = 0; j < d; ++j)
      if ((mask >> j) & 1u) q_s += q[j];
    for (int64_t b = 0; b < n; ++b) {
      double v = 0.0;
      for (int j = 0; j < d; ++j)
        if ((mask >> j) & 1u) v += means(b, j);
      x[b] = v - q_s;
    }
    std::sort(x.begin(), x.end());
    const double sum = std::accumulate(x.begin(), x.end(), 0.0);
    double low = 0.0, high = 0.0;
    for (int64_t rr = 0; rr <= trim && rr < n; ++rr) {
      if (rr > 0) {
        low += x[rr - 1];
        high += x[n - rr];
      }
      const double size = static_cast<double>(n - rr);
      r.first_moment_worst = std::max(
          {r.first_moment_worst, std::abs((sum - low) / size),
           std::abs((sum - high) / size)});
    }
    std::vector<double> sq(x.size());
    for (size_t i = 0; i < x.size(); ++i) sq[i] = x[i] * x[i];
    std::partial_sort(sq.begin(), sq.begin() + small, sq.end(),
                      std::greater<double>());
    r.condition2_worst = std::max(
        r.condition2_worst, std::accumulate(sq.begin(), sq.begin() + small, 0.0));
  }

  auto second_moment = [&](std::span<const int64_t> sel) {
    const CovBundle bundle = EmpiricalCov(means, sel, clean.k(), ch.lambda());
    return SubsetBilinearMax(bundle.d_matrix).value;
  };
  std::vector<int64_t> all = AllIndices(n);
  r.second_moment_worst = second_moment(all);
  Engine engine = MakeEngine(seed);
  for (int t = 0; t < opts.random_subcollections && n - trim >= 2; ++t) {
    std::vector<int64_t> sel = all;
    std::shuffle(sel.begin(), sel.end(), engine);
    sel.resize(static_cast<size_t>(n - trim));
    std::sort(sel.begin(), sel.end());
    r.second_moment_worst = std::max(r.second_moment_worst, second_moment(sel));
  }
  return r;
}

struct LipschitzReport {
  double max_gap = 0.0;        // max |Cov_{S,S'}(q) - Cov_{S,S'}(q')|
  double max_ratio = 0.0;      // max k * gap / max(|e(S)|, |e(S')|)
  int64_t violations = 0;      // pairs breaking gap <= 15/k max(...) + 1e-12
  SubsetMask worst_s;
  SubsetMask worst_s_prime;
  bool ok() const { return violations == 0; }
};

// Enumerates every pair (S, S') comparing Cov_{S,S'} = 1_S^T C 1_S' at q and
// q_shift against (15/k) max(|e(S)|, |e(S')|), e = q_shift - q. Violations are
// counted rather than thrown, because the inequality can fail for shifts with
// mixed signs.
inline LipschitzReport CovarianceLipschitzCheck(std::span<const double> q,
                                                std::span<const double> q_shift,
                                                int64_t k, double lambda) {
  internal::Require(q.size() == q_shift.size(), ErrorCode::kLengthMismatch,
                    "lengths differ");
  const int d = static_cast<int>(q.size());
  internal::Require(d <= kMaxEnumeratedSubsetDimension,
                    ErrorCode::kDimensionTooLarge,
                    "subset enumeration needs d <= 12");
  std::vector<double> e(d);
  for (int j = 0; j < d; ++j) e[j] = q_shift[j] - q[j];
  internal::Require(SupSubsetError(q_shift, q) <= 12.0,
                    ErrorCode::kShiftTooLarge, "max_S |e(S)| exceeds 12");
  const Eigen::MatrixXd diff =
      ModelCov(q_shift, k, lambda).matrix() - ModelCov(q, k, lambda).matrix();
  const uint32_t count = uint32_t{1} << d;
  std::vector<double> e_mass(count, 0.0);
  for (uint32_t s = 0; s < count; ++s)
    for (int j = 0; j < d; ++j)
      if ((s >> j) & 1u) e_mass[s] += e[j];
  LipschitzReport r;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (uint32_t s = 0; s < count; ++s) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j)
      if ((s >> j) & 1u) w += diff.col(j);
    double running = 0.0;
    for (uint32_t g = 0; g < count; ++g) {
      // Visit S' in Gray-code order so each step adds or removes one column.
      const uint32_t sp = g ^ (g >> 1);
      if (g > 0) {
        const int flipped = std::countr_zero(g);
        running += ((sp >> flipped) & 1u) ? w[flipped] : -w[flipped];
      }
      const double gap = std::abs(running);
      const double scale = std::max(std::abs(e_mass[s]), std::abs(e_mass[sp]));
      const double bound = 15.0 / static_cast<double>(k) * scale;
      r.max_gap = std::max(r.max_gap, gap);
      if (scale > 0.0)
        r.max_ratio = std::max(r.max_ratio, gap * static_cast<double>(k) / scale);
      if (gap > bound + 1e-12) ++r.violations;
      if (gap - bound > worst_excess) {
        worst_excess = gap - bound;
        r.worst_s = SubsetMask::FromBits(d, s);
        r.worst_s_prime = SubsetMask::FromBits(d, sp);
      }
    }
  }
  return r;
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_ESTIMATOR_H_
