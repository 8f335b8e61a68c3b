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

// Lower-bound constructions for the RAPPOR channel: the information matrix
// Omega, hard pairs (p, q) that are far in l1 yet nearly indistinguishable
// after privatization, the common-mixture certificate, and the Assouad cube.

#ifndef LDP_ROBUST_LOWERBOUND_H_
#define LDP_ROBUST_LOWERBOUND_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldp_robust/channel.h"
#include "ldp_robust/error.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

inline constexpr int kMaxEnumeratedDimension = 16;
inline constexpr int kMaxProductBits = 20;
// The sufficient choice of the construction constant, e^{-2}.
inline const double kHardPairC = std::exp(-2.0);

namespace internal {

// Q(z | x) for every z in {0,1}^d (z indexed by its bit pattern) and x in [d].
// Row x holds the 2^d masses of input x.
inline std::vector<std::vector<double>> ChannelTable(const RapporChannel& ch) {
  const int d = ch.d();
  Require(d <= kMaxEnumeratedDimension, ErrorCode::kDimensionTooLarge,
          "exact enumeration needs d <= 16");
  const double lam = ch.lambda();
  std::vector<double> by_distance(d + 1);
  for (int h = 0; h <= d; ++h)
    by_distance[h] = std::pow(lam, h) * std::pow(1.0 - lam, d - h);
  const uint32_t outcomes = uint32_t{1} << d;
  std::vector<std::vector<double>> table(d, std::vector<double>(outcomes));
  for (int x = 0; x < d; ++x) {
    for (uint32_t z = 0; z < outcomes; ++z)
      table[x][z] = by_distance[std::popcount(z ^ (uint32_t{1} << x))];
  }
  return table;
}

}  // namespace internal

// Law of one privatized report when the input is drawn from p, over the 2^d
// outcomes identified by their bit patterns.
inline FiniteDist PushForward(const RapporChannel& ch, const ProbVector& p) {
  internal::Require(p.d() == ch.d(), ErrorCode::kDimensionMismatch,
                    "distribution and channel dimensions differ");
  const auto table = internal::ChannelTable(ch);
  const size_t outcomes = table[0].size();
  std::vector<uint64_t> ids(outcomes);
  std::vector<double> masses(outcomes, 0.0);
  for (size_t z = 0; z < outcomes; ++z) {
    ids[z] = z;
    for (int x = 0; x < ch.d(); ++x) masses[z] += p[x] * table[x][z];
  }
  return FiniteDist::Make(std::move(ids), std::move(masses));
}

struct OmegaMatrix {
  Eigen::MatrixXd entries;
  double channel_alpha = 0.0;

  int d() const { return static_cast<int>(entries.rows()); }
};

// Omega(j, j') = sum_z q_j(z) q_j'(z) Q(z | 0) with
// q_j(z) = Q(z | j) / Q(z | 0) - 1, by exact enumeration of {0,1}^d.
inline OmegaMatrix ComputeOmega(const RapporChannel& ch) {
  const auto table = internal::ChannelTable(ch);
  const int d = ch.d();
  const size_t outcomes = table[0].size();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd qz(d);
  for (size_t z = 0; z < outcomes; ++z) {
    const double base = table[0][z];
    if (base <= 0.0) continue;
    for (int j = 0; j < d; ++j) qz[j] = table[j][z] / base - 1.0;
    qz[0] = 0.0;
    omega.noalias() += base * qz * qz.transpose();
  }
  // Exact symmetry regardless of accumulation order.
  omega = 0.5 * (omega + omega.transpose()).eval();
  return OmegaMatrix{std::move(omega), ch.alpha()};
}

struct OmegaEstimate {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd standard_error;
};

// Monte Carlo estimate of Omega from z ~ Q(. | 0), for dimensions beyond exact
// enumeration.
inline OmegaEstimate EstimateOmega(const RapporChannel& ch, int64_t samples,
                                   const RngSeed& seed) {
  internal::Require(samples >= 2, ErrorCode::kInvalidArgument,
                    "need at least two samples");
  const int d = ch.d();
  const double r = (1.0 - ch.lambda()) / ch.lambda();
  Engine engine = MakeEngine(seed);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(d, d);
  std::vector<uint8_t> z(PackedBytes(d));
  Eigen::VectorXd qz(d);
  for (int64_t s = 0; s < samples; ++s) {
    ch.PrivatizeInto(0, engine, z.data());
    // The ratio Q(z|j)/Q(z|0) only involves coordinates 0 and j.
    const double first = GetBit(z.data(), 0) ? 1.0 / r : r;
    qz[0] = 0.0;
    for (int j = 1; j < d; ++j)
      qz[j] = first * (GetBit(z.data(), j) ? r : 1.0 / r) - 1.0;
    const Eigen::MatrixXd outer = qz * qz.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
  }
  const double n = static_cast<double>(samples);
  Eigen::MatrixXd mean = sum / n;
  Eigen::MatrixXd var = (sum_sq / n - mean.cwiseProduct(mean)) * (n / (n - 1));
  return {mean, (var.cwiseMax(0.0) / n).cwiseSqrt()};
}

// Count of eigenvalues of Omega at most 3 e^2 alpha^2.
inline int LowEigenCount(const OmegaMatrix& omega) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(omega.entries);
  const double cap = 3.0 * std::exp(2.0) * omega.channel_alpha *
                     omega.channel_alpha;
  int count = 0;
  for (int i = 0; i < omega.d(); ++i)
    if (solver.eigenvalues()[i] <= cap) ++count;
  return count;
}

// Orthonormal basis (columns) of span(v_1..v_j0) intersected with the
// sum-zero hyperplane, v_i the eigenvectors of Omega in ascending order.
inline Eigen::MatrixXd LowEigenspaceBasis(const OmegaMatrix& omega) {
  const int d = omega.d();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(omega.entries);
  const int j0 = LowEigenCount(omega);
  internal::Require(j0 > 0, ErrorCode::kEmptySubspace, "no low eigenvalues");
  const Eigen::MatrixXd u = solver.eigenvectors().leftCols(j0);
  // x = U c lies in the hyperplane iff c is orthogonal to w = U^T 1.
  const Eigen::VectorXd w = u.transpose() * Eigen::VectorXd::Ones(d);
  if (w.norm() <= 1e-10) return u;
  internal::Require(j0 > 1, ErrorCode::kEmptySubspace,
                    "low eigenspace meets the hyperplane only at 0");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  const Eigen::MatrixXd q = qr.householderQ();
  return u * q.rightCols(j0 - 1);
}

// Squared l2 norm prescribed for Delta: C eps^2 / (2 e^2 alpha^2 k), capped
// at 1 / d.
inline double DeltaNormSquared(int d, double alpha, double eps, int k) {
  const double scale = kHardPairC * eps * eps /
                       (2.0 * std::exp(2.0) * alpha * alpha * k);
  return std::min(scale, 1.0 / d);
}

// Best-of-N Gaussian direction in the low eigenspace (largest l1/l2 ratio,
// ties to the lowest sample index), scaled to the prescribed l2 norm.
inline std::vector<double> LowEigenspaceDelta(const OmegaMatrix& omega,
                                              double eps, int k,
                                              int gaussian_samples,
                                              const RngSeed& seed) {
  internal::Require(omega.d() >= kMinAlphabet, ErrorCode::kTooSmallAlphabet,
                    "alphabet size < 3");
  internal::Require(gaussian_samples >= 1 && k >= 1,
                    ErrorCode::kInvalidArgument,
                    "need gaussian_samples >= 1 and k >= 1");
  const Eigen::MatrixXd basis = LowEigenspaceBasis(omega);
  const int dim = static_cast<int>(basis.cols());
  Eigen::VectorXd best;
  double best_ratio = -1.0;
  Eigen::VectorXd coeffs(dim);
  for (int s = 0; s < gaussian_samples; ++s) {
    Engine engine = MakeEngine(seed.Stream(static_cast<uint64_t>(s)));
    std::normal_distribution<double> normal;
    for (int i = 0; i < dim; ++i) coeffs[i] = normal(engine);
    const Eigen::VectorXd x = basis * coeffs;
    const double l2 = x.norm();
    if (l2 <= 0.0) continue;
    const double ratio = x.lpNorm<1>() / l2;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = x;
    }
  }
  internal::Require(best_ratio > 0.0, ErrorCode::kEmptySubspace,
                    "every Gaussian draw was zero");
  const double target = std::sqrt(
      DeltaNormSquared(omega.d(), omega.channel_alpha, eps, k));
  best *= target / best.norm();
  // Remove the rounding drift off the hyperplane.
  best.array() -= best.mean();
  return std::vector<double>(best.data(), best.data() + best.size());
}

struct HardPair {
  ProbVector p;
  ProbVector q;
  std::vector<double> delta;
  double chi2_one_sample = 0.0;
  double quad_form = 0.0;
  double tv_bound_k = 0.0;
  double eps = 0.0;
  int k = 1;
  double alpha = 0.0;

  double l1() const { return L1Dist(p, q); }
};

inline double QuadForm(const OmegaMatrix& omega, std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(),
                                            static_cast<Eigen::Index>(x.size()));
  return v.dot(omega.entries * v);
}

// p = |Delta| / ||Delta||_1 and q = p - Delta, with exact certificates.
inline HardPair MakeHardPair(const RapporChannel& ch, double eps, int k,
                             const RngSeed& seed,
                             int gaussian_samples = 10000) {
  internal::Require(eps > 0.0 && eps < 0.5, ErrorCode::kEpsOutOfRange,
                    "eps must lie in (0, 1/2)");
  const OmegaMatrix omega = ComputeOmega(ch);
  const std::vector<double> delta =
      LowEigenspaceDelta(omega, eps, k, gaussian_samples, seed);
  const double l1 = L1Dist(delta, std::vector<double>(delta.size(), 0.0));
  internal::Require(l1 <= 1.0, ErrorCode::kInfeasibleScale,
                    "||Delta||_1 = " + std::to_string(l1) + " exceeds 1");
  std::vector<double> pw(delta.size()), qw(delta.size());
  for (size_t j = 0; j < delta.size(); ++j) {
    pw[j] = std::abs(delta[j]) / l1;
    qw[j] = pw[j] - delta[j];
  }
  HardPair pair{ProbVector::Make(pw), ProbVector::Make(qw), {}, 0, 0, 0,
                eps, k, ch.alpha()};
  // Store the difference of the validated vectors so q = p - Delta exactly.
  pair.delta.resize(delta.size());
  for (size_t j = 0; j < delta.size(); ++j)
    pair.delta[j] = pair.p[j] - pair.q[j];
  pair.quad_form = QuadForm(omega, pair.delta);
  pair.chi2_one_sample = ChiSquare(PushForward(ch, pair.p),
                                   PushForward(ch, pair.q));
  pair.tv_bound_k = TvProductBound(pair.chi2_one_sample, k);
  return pair;
}

struct HardPairReport {
  double sum_residual = 0.0;      // |Delta . 1|
  double quad_form_bound = 0.0;   // C eps^2 / k
  double chi2_bound = 0.0;        // e^alpha Delta^T Omega Delta
  double l1_over_rate = 0.0;      // ||p - q||_1 / (eps sqrt(d) / (alpha sqrt(k)))
  bool sum_zero = false;
  bool quad_form_ok = false;
  bool chi2_ok = false;
  bool tv_ok = false;

  bool all_ok() const { return sum_zero && quad_form_ok && chi2_ok && tv_ok; }
};

inline HardPairReport CheckHardPair(const HardPair& pair,
                                    const OmegaMatrix& omega) {
  HardPairReport r;
  double sum = 0.0;
  for (double x : pair.delta) sum += x;
  r.sum_residual = std::abs(sum);
  r.sum_zero = r.sum_residual <= kInvariantTolerance;
  const double quad = QuadForm(omega, pair.delta);
  r.quad_form_bound = kHardPairC * pair.eps * pair.eps / pair.k;
  r.quad_form_ok = quad <= r.quad_form_bound;
  r.chi2_bound = std::exp(pair.alpha) * quad;
  r.chi2_ok = pair.chi2_one_sample <= r.chi2_bound + 1e-9;
  r.tv_ok = pair.tv_bound_k <= pair.eps;
  const double rate = pair.eps * std::sqrt(static_cast<double>(pair.p.d())) /
                      (pair.alpha * std::sqrt(static_cast<double>(pair.k)));
  r.l1_over_rate = pair.l1() / rate;
  return r;
}

// Largest constant c with ||Delta||_1 >= c eps sqrt(d) / (alpha sqrt(k))
// reachable at the prescribed ||Delta||_2 (attained only when |Delta| is flat).
inline double HardPairRateCeiling(int d, double alpha, double eps, int k) {
  const double rate = eps * std::sqrt(static_cast<double>(d)) /
                      (alpha * std::sqrt(static_cast<double>(k)));
  return std::sqrt(d * DeltaNormSquared(d, alpha, eps, k)) / rate;
}

struct CommonMixture {
  FiniteDist a;
  FiniteDist n_p;
  FiniteDist n_q;
  double tv = 0.0;               // TV between the k-fold products
  double max_residual = 0.0;     // worst mixture-identity residual
  double min_mass = 0.0;         // smallest mass among N_p and N_q
};

namespace internal {

// k-fold product of a law on 2^d outcomes; the outcome id concatenates the k
// reports, report i in bits [i d, (i + 1) d).
inline std::vector<double> ProductMasses(const std::vector<double>& single,
                                         int d, int k) {
  std::vector<double> out{1.0};
  for (int i = 0; i < k; ++i) {
    std::vector<double> next(out.size() * single.size());
    for (size_t z = 0; z < single.size(); ++z)
      for (size_t prev = 0; prev < out.size(); ++prev)
        next[(z << (i * d)) | prev] = out[prev] * single[z];
    out = std::move(next);
  }
  return out;
}

}  // namespace internal

// A = max(P, Q) / (1 + TV) with N_p = (A - (1 - eps) P) / eps and likewise
// N_q, where P and Q are the k-fold laws of the privatized pair.
inline CommonMixture MakeCommonMixture(const HardPair& pair,
                                       const RapporChannel& ch, int k) {
  const int d = ch.d();
  internal::Require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1");
  internal::Require(static_cast<int64_t>(d) * k <= kMaxProductBits,
                    ErrorCode::kProductSpaceTooLarge,
                    "(2^d)^k exceeds 2^20 outcomes");
  internal::Require(pair.eps > 0.0 && pair.eps < 1.0, ErrorCode::kEpsOutOfRange,
                    "eps must lie in (0, 1)");
  const std::vector<double> p =
      internal::ProductMasses(PushForward(ch, pair.p).masses(), d, k);
  const std::vector<double> q =
      internal::ProductMasses(PushForward(ch, pair.q).masses(), d, k);
  const size_t size = p.size();
  double tv = 0.0;
  for (size_t i = 0; i < size; ++i) tv += std::abs(p[i] - q[i]);
  tv *= 0.5;
  const double eps = pair.eps;
  std::vector<double> a(size), np(size), nq(size);
  double residual = 0.0, min_mass = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < size; ++i) {
    a[i] = std::max(p[i], q[i]) / (1.0 + tv);
    np[i] = (a[i] - (1.0 - eps) * p[i]) / eps;
    nq[i] = (a[i] - (1.0 - eps) * q[i]) / eps;
    residual = std::max(residual,
                        std::abs((1.0 - eps) * p[i] + eps * np[i] - a[i]));
    residual = std::max(residual,
                        std::abs((1.0 - eps) * q[i] + eps * nq[i] - a[i]));
    min_mass = std::min({min_mass, np[i], nq[i]});
  }
  std::vector<uint64_t> ids(size);
  for (size_t i = 0; i < size; ++i) ids[i] = i;
  return CommonMixture{FiniteDist::Make(ids, std::move(a)),
                       FiniteDist::Make(ids, std::move(np)),
                       FiniteDist::Make(ids, std::move(nq)), tv, residual,
                       min_mass};
}

// Paired-perturbation family p_s(j) = 1/d + s_j gamma for j < floor(d/2),
// mirrored coordinate d - 1 - j gets -s_j gamma, a middle coordinate (odd d)
// stays at 1/d.
class AssouadFamily {
 public:
  static AssouadFamily Create(int d, int64_t n, double alpha, double c_gamma) {
    internal::Require(d >= kMinAlphabet, ErrorCode::kTooSmallAlphabet,
                      "alphabet size < 3");
    internal::Require(c_gamma > 0.0 && c_gamma < 1.0,
                      ErrorCode::kInvalidArgument, "c_gamma must lie in (0, 1)");
    internal::Require(n >= 1 && alpha > 0.0, ErrorCode::kInvalidArgument,
                      "need n >= 1 and alpha > 0");
    const double gamma = std::min(
        c_gamma / (alpha * std::sqrt(static_cast<double>(n))), c_gamma / d);
    return AssouadFamily(d, n, alpha, c_gamma, gamma);
  }

  int d() const { return d_; }
  int64_t n() const { return n_; }
  double alpha() const { return alpha_; }
  double c_gamma() const { return c_gamma_; }
  double gamma() const { return gamma_; }
  int half() const { return d_ / 2; }
  // log2 of the family size.
  int log2_size() const { return half(); }

  ProbVector Member(std::span<const int> signs) const {
    internal::Require(signs.size() == static_cast<size_t>(half()),
                      ErrorCode::kBadSigns, "sign vector must have floor(d/2)"
                                            " entries");
    std::vector<double> w(d_, 1.0 / d_);
    for (int j = 0; j < half(); ++j) {
      internal::Require(signs[j] == 1 || signs[j] == -1, ErrorCode::kBadSigns,
                        "signs must be +1 or -1");
      w[j] += signs[j] * gamma_;
      w[d_ - 1 - j] -= signs[j] * gamma_;
    }
    return ProbVector::Make(w);
  }

 private:
  AssouadFamily(int d, int64_t n, double alpha, double c_gamma, double gamma)
      : d_(d), n_(n), alpha_(alpha), c_gamma_(c_gamma), gamma_(gamma) {}

  int d_;
  int64_t n_;
  double alpha_;
  double c_gamma_;
  double gamma_;
};

inline int Hamming(std::span<const int> a, std::span<const int> b) {
  internal::Require(a.size() == b.size(), ErrorCode::kLengthMismatch,
                    "sign vectors differ in length");
  int h = 0;
  for (size_t i = 0; i < a.size(); ++i) h += a[i] != b[i] ? 1 : 0;
  return h;
}

struct AssouadNeighbor {
  int flipped = 0;
  double chi2_forward = 0.0;   // chi2(Q p_s || Q p_s')
  double chi2_backward = 0.0;  // chi2(Q p_s' || Q p_s)
  double tv_bound_n = 0.0;     // TvProductBound(chi2_forward, n)
};

struct AssouadReport {
  std::vector<AssouadNeighbor> neighbors;
  double max_chi2 = 0.0;
  double constant = 0.0;       // max chi2 / (alpha^2 gamma^2)
  double max_asymmetry = 0.0;  // max |fwd - bwd| / max(fwd, bwd)
};

// Exact chi-square between the privatized laws of `base` and each of its
// floor(d/2) Hamming neighbors.
inline AssouadReport AssouadChi2Check(const AssouadFamily& family,
                                      const RapporChannel& ch,
                                      std::span<const int> base) {
  internal::Require(ch.d() == family.d(), ErrorCode::kDimensionMismatch,
                    "family and channel dimensions differ");
  internal::Require(ch.d() <= kMaxEnumeratedDimension,
                    ErrorCode::kDimensionTooLarge,
                    "exact enumeration needs d <= 16");
  const FiniteDist law = PushForward(ch, family.Member(base));
  AssouadReport report;
  std::vector<int> signs(base.begin(), base.end());
  for (int i = 0; i < family.half(); ++i) {
    signs[i] = -signs[i];
    const FiniteDist other = PushForward(ch, family.Member(signs));
    signs[i] = -signs[i];
    AssouadNeighbor nb;
    nb.flipped = i;
    nb.chi2_forward = ChiSquare(law, other);
    nb.chi2_backward = ChiSquare(other, law);
    nb.tv_bound_n = TvProductBound(nb.chi2_forward, static_cast<int>(
                                                        family.n()));
    const double hi = std::max(nb.chi2_forward, nb.chi2_backward);
    report.max_chi2 = std::max(report.max_chi2, hi);
    if (hi > 0.0) {
      report.max_asymmetry = std::max(
          report.max_asymmetry,
          std::abs(nb.chi2_forward - nb.chi2_backward) / hi);
    }
    report.neighbors.push_back(nb);
  }
  const double scale = family.alpha() * family.alpha() * family.gamma() *
                       family.gamma();
  report.constant = report.max_chi2 / scale;
  return report;
}

inline AssouadReport AssouadChi2Check(const AssouadFamily& family,
                                      const RapporChannel& ch) {
  return AssouadChi2Check(family, ch, std::vector<int>(family.half(), 1));
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_LOWERBOUND_H_
