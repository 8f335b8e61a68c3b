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

// Maximization of <M, A> over the Gram set {M_ij = <u_i, v_j> : |u_i| = |v_j|
// = 1}, and the exact subset-pair oracle max_{S,S'} |1_S^T A 1_S'| that
// brackets it: oracle <= Gram optimum <= 8 * oracle.

#ifndef LDP_ROBUST_GRAM_H_
#define LDP_ROBUST_GRAM_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldp_robust/error.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

inline constexpr int kMaxSubsetOracleDimension = 22;

class SymMatrix {
 public:
  static SymMatrix Make(Eigen::MatrixXd m) {
    internal::Require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
                      "matrix is not square");
    internal::Require(m.size() == 0 ||
                          (m - m.transpose()).cwiseAbs().maxCoeff() <=
                              kInvariantTolerance,
                      ErrorCode::kNotSymmetric, "matrix is not symmetric");
    return SymMatrix(std::move(m));
  }

  // Averages away asymmetry from floating-point accumulation.
  static SymMatrix Symmetrize(const Eigen::MatrixXd& m) {
    internal::Require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
                      "matrix is not square");
    return SymMatrix(0.5 * (m + m.transpose()));
  }

  int d() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  explicit SymMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

struct SubsetPairMax {
  double value = 0.0;
  SubsetMask s;
  SubsetMask s_prime;
};

// Enumerates S in Gray-code order keeping w = A 1_S; for fixed S the best S'
// is the support of the positive part of w or of its negative part. Ties go
// to the first S visited and to the positive part.
inline SubsetPairMax SubsetBilinearMax(const SymMatrix& a) {
  const int d = a.d();
  internal::Require(d <= kMaxSubsetOracleDimension,
                    ErrorCode::kDimensionTooLarge,
                    "subset enumeration needs d <= 22");
  const Eigen::MatrixXd& m = a.matrix();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  uint32_t best_s = 0;
  double best = -1.0;
  const uint32_t count = uint32_t{1} << d;
  for (uint32_t g = 0; g < count; ++g) {
    if (g > 0) {
      const int flipped = std::countr_zero(g);
      const uint32_t gray = g ^ (g >> 1);
      if ((gray >> flipped) & 1u) {
        w += m.col(flipped);
      } else {
        w -= m.col(flipped);
      }
    }
    double pos = 0.0, neg = 0.0;
    for (int j = 0; j < d; ++j) {
      if (w[j] > 0.0) {
        pos += w[j];
      } else {
        neg -= w[j];
      }
    }
    const double v = std::max(pos, neg);
    if (v > best) {
      best = v;
      best_s = g ^ (g >> 1);
    }
  }
  // Recompute the winner without the accumulated drift.
  SubsetPairMax out;
  out.s = SubsetMask::FromBits(d, best_s);
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j) ind[j] = out.s.Contains(j) ? 1.0 : 0.0;
  const Eigen::VectorXd ws = m * ind;
  double pos = 0.0, neg = 0.0;
  SubsetMask plus(d), minus(d);
  for (int j = 0; j < d; ++j) {
    if (ws[j] > 0.0) {
      pos += ws[j];
      plus.Set(j);
    } else if (ws[j] < 0.0) {
      neg -= ws[j];
      minus.Set(j);
    }
  }
  if (pos >= neg) {
    out.value = pos;
    out.s_prime = plus;
  } else {
    out.value = neg;
    out.s_prime = minus;
  }
  return out;
}

// <1_S 1_S'^T, A> for explicit subsets.
inline double SubsetBilinear(const SymMatrix& a, const SubsetMask& s,
                             const SubsetMask& s_prime) {
  double v = 0.0;
  for (int i = 0; i < a.d(); ++i) {
    if (!s.Contains(i)) continue;
    for (int j = 0; j < a.d(); ++j)
      if (s_prime.Contains(j)) v += a(i, j);
  }
  return v;
}

struct GramSolution {
  Eigen::MatrixXd u;  // d x rank, unit rows
  Eigen::MatrixXd v;  // d x rank, unit rows
  double value = 0.0;
  int rank = 0;
  int restart = 0;               // index of the winning restart
  std::vector<double> history;   // objective after each half-sweep (winner)

  Eigen::MatrixXd M() const { return u * v.transpose(); }
};

struct GramOptions {
  int rank = 8;  // capped at d
  int restarts = 16;
  double sweep_tol = 1e-8;
  int max_sweeps = 10000;
};

inline double GramObjective(const SymMatrix& a, const Eigen::MatrixXd& u,
                            const Eigen::MatrixXd& v) {
  return (u.array() * (a.matrix() * v).array()).sum();
}

namespace internal {

// Replaces each row of `x` by the normalized row of `g`; zero rows of `g`
// leave the row of `x` unchanged.
inline void NormalizeRowsFrom(const Eigen::MatrixXd& g, Eigen::MatrixXd& x) {
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double norm = g.row(i).norm();
    if (norm > 0.0) x.row(i) = g.row(i) / norm;
  }
}

inline Eigen::MatrixXd RandomUnitRows(int d, int r, Engine& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(d, r);
  for (int i = 0; i < d; ++i) {
    for (int c = 0; c < r; ++c) x(i, c) = normal(engine);
    const double norm = x.row(i).norm();
    if (norm > 0.0) {
      x.row(i) /= norm;
    } else {
      x.row(i).setZero();
      x(i, 0) = 1.0;
    }
  }
  return x;
}

}  // namespace internal

// Alternating block maximization: u_i <- normalize((A V)_i) then
// v_j <- normalize((A U)_j). Each block update is exact, so the objective is
// nondecreasing. Restart t starts from seed.Stream(t); the best value wins,
// ties to the lowest restart.
inline GramSolution GramMaximize(const SymMatrix& a, const GramOptions& opts,
                                 const RngSeed& seed) {
  const int d = a.d();
  internal::Require(opts.rank >= 3, ErrorCode::kRankTooSmall,
                    "rank must be >= 3");
  internal::Require(opts.restarts >= 1, ErrorCode::kInvalidArgument,
                    "restarts must be >= 1");
  internal::Require(d >= 1, ErrorCode::kDimensionMismatch, "empty matrix");
  const int r = std::min(opts.rank, std::max(d, 3));
  GramSolution best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < opts.restarts; ++t) {
    Engine engine = MakeEngine(seed.Stream(static_cast<uint64_t>(t)));
    Eigen::MatrixXd u = internal::RandomUnitRows(d, r, engine);
    Eigen::MatrixXd v = internal::RandomUnitRows(d, r, engine);
    std::vector<double> history;
    double prev = GramObjective(a, u, v);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      internal::NormalizeRowsFrom(a.matrix() * v, u);
      history.push_back(GramObjective(a, u, v));
      internal::NormalizeRowsFrom(a.matrix() * u, v);
      const double now = GramObjective(a, u, v);
      history.push_back(now);
      const double scale = std::max(std::abs(now), 1e-300);
      const bool converged = now - prev <= opts.sweep_tol * scale;
      prev = now;
      if (converged) break;
    }
    const double value = GramObjective(a, u, v);
    if (value > best.value) {
      best.u = std::move(u);
      best.v = std::move(v);
      best.value = value;
      best.rank = r;
      best.restart = t;
      best.history = std::move(history);
    }
  }
  return best;
}

inline GramSolution GramMaximize(const SymMatrix& a, const RngSeed& seed) {
  return GramMaximize(a, GramOptions{}, seed);
}

struct SandwichReport {
  double oracle = 0.0;
  double gram = 0.0;
  double tolerance = 0.0;
  double lower_margin = 0.0;  // gram + tol - oracle, >= 0 when it holds
  double upper_margin = 0.0;  // 8 oracle + tol - gram, >= 0 when it holds
  bool ok() const { return lower_margin >= 0.0 && upper_margin >= 0.0; }
};

inline SandwichReport SandwichCheck(const SymMatrix& a,
                                    const GramSolution& sol) {
  SandwichReport r;
  r.oracle = SubsetBilinearMax(a).value;
  r.gram = sol.value;
  r.tolerance = 1e-6 * a.matrix().norm();
  r.lower_margin = r.gram + r.tolerance - r.oracle;
  r.upper_margin = 8.0 * r.oracle + r.tolerance - r.gram;
  return r;
}

// Factors realizing M = 1_S 1_S'^T inside the Gram set from three orthonormal
// directions: u_i = e0 on S and e1 off it, v_j = e0 on S' and e2 off it.
inline GramSolution IndicatorGram(const SymMatrix& a, const SubsetMask& s,
                                  const SubsetMask& s_prime, int rank = 3) {
  internal::Require(rank >= 3, ErrorCode::kRankTooSmall, "rank must be >= 3");
  const int d = a.d();
  internal::Require(s.d() == d && s_prime.d() == d,
                    ErrorCode::kDimensionMismatch, "subset dimension mismatch");
  GramSolution sol;
  sol.rank = rank;
  sol.u = Eigen::MatrixXd::Zero(d, rank);
  sol.v = Eigen::MatrixXd::Zero(d, rank);
  for (int i = 0; i < d; ++i) {
    sol.u(i, s.Contains(i) ? 0 : 1) = 1.0;
    sol.v(i, s_prime.Contains(i) ? 0 : 2) = 1.0;
  }
  sol.value = GramObjective(a, sol.u, sol.v);
  return sol;
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_GRAM_H_
