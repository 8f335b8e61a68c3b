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

#include "ldp_robust/lowerbound.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"

namespace ldp_robust {
namespace {

using ::ldp_robust::testing::ExpectErrorCode;

// Frozen after a pilot: the largest reachable constant at d = 8, alpha = 1,
// k = 100, eps = 0.1 is about 0.096, and the best-of-10^4 direction reaches
// about 0.095.
constexpr double kRateConstant = 0.08;
// Frozen envelope for max chi2 / (alpha^2 gamma^2) over Assouad neighbors.
constexpr double kAssouadEnvelope = 50.0;

// Law of one report under input law p, computed bit by bit.
std::vector<double> ReportLaw(const ProbVector& p, double lam) {
  const int d = p.d();
  std::vector<double> law(size_t{1} << d, 0.0);
  for (size_t z = 0; z < law.size(); ++z) {
    for (int x = 0; x < d; ++x) {
      double m = p[x];
      for (int j = 0; j < d; ++j) {
        const bool bit = (z >> j) & 1;
        m *= bit == (j == x) ? 1 - lam : lam;
      }
      law[z] += m;
    }
  }
  return law;
}

double ChiSquareOracle(const std::vector<double>& p,
                       const std::vector<double>& q) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]) / q[i];
  return s;
}

TEST(PushForwardTest, MatchesBitwiseLaw) {
  const RapporChannel ch = RapporChannel::Create(5, 0.8);
  const ProbVector p = ProbVector::Make({0.1, 0.4, 0.2, 0.2, 0.1});
  const FiniteDist law = PushForward(ch, p);
  const std::vector<double> oracle = ReportLaw(p, ch.lambda());
  ASSERT_EQ(law.size(), oracle.size());
  for (size_t z = 0; z < oracle.size(); ++z) {
    EXPECT_EQ(law.outcomes()[z], z);
    EXPECT_NEAR(law.masses()[z], oracle[z], 1e-16);
  }
}

TEST(OmegaTest, ClosedFormEntries) {
  // Under z ~ Q(.|0) the ratio Q(z|j)/Q(z|0) factors over coordinates 0 and
  // j, each factor having mean 1 and second moment m, so Omega has m - 1 off
  // the diagonal and m^2 - 1 on it (coordinates 1..d-1).
  for (double alpha : {0.5, 1.0, 2.0}) {
    const RapporChannel ch = RapporChannel::Create(7, alpha);
    const double l = ch.lambda();
    const double m = (1 - l) * (1 - l) / l + l * l / (1 - l);
    const OmegaMatrix omega = ComputeOmega(ch);
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 7; ++j) {
        double expected = 0.0;
        if (i > 0 && j > 0) expected = i == j ? m * m - 1 : m - 1;
        EXPECT_NEAR(omega.entries(i, j), expected, 1e-12);
        EXPECT_EQ(omega.entries(i, j), omega.entries(j, i));
      }
    }
  }
}

TEST(OmegaTest, MonteCarloAgreement) {
  const RapporChannel ch = RapporChannel::Create(4, 1.0);
  const OmegaMatrix exact = ComputeOmega(ch);
  const OmegaEstimate mc = EstimateOmega(ch, 10000000, RngSeed{1, 0});
  for (int i = 1; i < 4; ++i) {
    for (int j = 1; j < 4; ++j) {
      EXPECT_LE(std::abs(mc.mean(i, j) - exact.entries(i, j)),
                5 * mc.standard_error(i, j))
          << i << "," << j;
    }
  }
  ExpectErrorCode(ErrorCode::kDimensionTooLarge,
                  [] { ComputeOmega(RapporChannel::Create(17, 1.0)); });
}

TEST(LowEigenspaceDeltaTest, ConstructionConstraints) {
  for (int d : {3, 5, 8, 12}) {
    const RapporChannel ch = RapporChannel::Create(d, 1.0);
    const OmegaMatrix omega = ComputeOmega(ch);
    const std::vector<double> delta =
        LowEigenspaceDelta(omega, 0.1, 100, 500, RngSeed{2, 0});
    double sum = 0.0, l1 = 0.0, l2 = 0.0;
    for (double x : delta) {
      sum += x;
      l1 += std::abs(x);
      l2 += x * x;
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
    EXPECT_LE(QuadForm(omega, delta), 2 * std::exp(2.0) * l2 + 1e-12);
    EXPECT_LE(l1, std::sqrt(d * l2) + 1e-15);
    EXPECT_NEAR(l2, DeltaNormSquared(d, 1.0, 0.1, 100), 1e-15);
  }
}

TEST(LowEigenspaceDeltaTest, SpreadRatio) {
  for (int d = 6; d <= 16; ++d) {
    const OmegaMatrix omega = ComputeOmega(RapporChannel::Create(d, 1.0));
    const std::vector<double> delta =
        LowEigenspaceDelta(omega, 0.1, 100, 10000, RngSeed{3, 0});
    double l1 = 0.0, l2 = 0.0;
    for (double x : delta) {
      l1 += std::abs(x);
      l2 += x * x;
    }
    EXPECT_GE(l1 / std::sqrt(l2), 0.2 * std::sqrt(d)) << "d=" << d;
  }
}

TEST(HardPairTest, CertificatesAtReferencePoint) {
  const RapporChannel ch = RapporChannel::Create(8, 1.0);
  const HardPair pair = MakeHardPair(ch, 0.1, 100, RngSeed{4, 0});
  for (int j = 0; j < 8; ++j) EXPECT_GE(pair.q[j], 0.0);
  EXPECT_LE(pair.tv_bound_k, 0.1);
  const double rate = 0.1 * std::sqrt(8.0) / std::sqrt(100.0);
  EXPECT_GE(pair.l1(), kRateConstant * rate);
  EXPECT_LT(HardPairRateCeiling(8, 1.0, 0.1, 100), 0.2);

  const double chi2 = ChiSquareOracle(ReportLaw(pair.p, ch.lambda()),
                                      ReportLaw(pair.q, ch.lambda()));
  EXPECT_NEAR(pair.chi2_one_sample, chi2, 1e-15);
  EXPECT_LE(chi2, std::exp(1.0) * pair.quad_form);
  EXPECT_LE(pair.quad_form, kHardPairC * 0.01 / 100);

  const HardPairReport report = CheckHardPair(pair, ComputeOmega(ch));
  EXPECT_TRUE(report.all_ok());
  EXPECT_NEAR(report.l1_over_rate, pair.l1() / rate, 1e-12);
}

TEST(HardPairTest, Errors) {
  const RapporChannel ch = RapporChannel::Create(8, 1.0);
  ExpectErrorCode(ErrorCode::kEpsOutOfRange,
                  [&] { MakeHardPair(ch, 0.0, 100, RngSeed{}); });
}

TEST(CommonMixtureTest, DegeneratePair) {
  const RapporChannel ch = RapporChannel::Create(3, 1.0);
  const ProbVector p = ProbVector::Make({0.5, 0.3, 0.2});
  HardPair pair{p, p, {0, 0, 0}, 0, 0, 0, 0.1, 2, 1.0};
  const CommonMixture mix = MakeCommonMixture(pair, ch, 2);
  EXPECT_EQ(mix.tv, 0.0);
  const std::vector<double> single = ReportLaw(p, ch.lambda());
  for (size_t z = 0; z < mix.a.size(); ++z) {
    const double product = single[z & 7] * single[z >> 3];
    EXPECT_NEAR(mix.a.masses()[z], product, 1e-15);
    EXPECT_NEAR(mix.n_p.masses()[z], product, 1e-14);
    EXPECT_NEAR(mix.n_q.masses()[z], product, 1e-14);
  }
}

TEST(CommonMixtureTest, GenuinePairIsValidMeasure) {
  const RapporChannel ch = RapporChannel::Create(3, 1.0);
  const HardPair pair = MakeHardPair(ch, 0.1, 2, RngSeed{5, 0});
  const CommonMixture mix = MakeCommonMixture(pair, ch, 2);
  EXPECT_EQ(mix.a.size(), 64u);
  EXPECT_LE(mix.max_residual, 1e-12);
  EXPECT_GE(mix.min_mass, -1e-12);
  for (const FiniteDist* f : {&mix.n_p, &mix.n_q}) {
    double s = 0.0;
    for (double m : f->masses()) s += m;
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
  // Independent TV of the two-report products.
  const std::vector<double> lp = ReportLaw(pair.p, ch.lambda());
  const std::vector<double> lq = ReportLaw(pair.q, ch.lambda());
  double tv = 0.0;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) tv += std::abs(lp[a] * lp[b] - lq[a] * lq[b]);
  EXPECT_NEAR(mix.tv, tv / 2, 1e-15);
  ExpectErrorCode(ErrorCode::kProductSpaceTooLarge,
                  [&] { MakeCommonMixture(pair, ch, 7); });
}

TEST(AssouadFamilyTest, MembersAndIdentity) {
  const AssouadFamily fam = AssouadFamily::Create(7, 400, 1.0, 0.1);
  EXPECT_EQ(fam.half(), 3);
  const double gamma = fam.gamma();
  EXPECT_DOUBLE_EQ(gamma, std::min(0.1 / std::sqrt(400.0), 0.1 / 7));
  std::vector<std::vector<int>> all;
  for (int m = 0; m < 8; ++m)
    all.push_back({(m & 1) ? 1 : -1, (m & 2) ? 1 : -1, (m & 4) ? 1 : -1});
  for (const auto& s : all) {
    const ProbVector p = fam.Member(s);
    EXPECT_EQ(p[3], 1.0 / 7);
    double sum = 0.0;
    for (double x : p.weights()) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    for (const auto& t : all) {
      EXPECT_NEAR(L1Dist(p, fam.Member(t)), 4 * gamma * Hamming(s, t), 1e-15);
    }
  }
  ExpectErrorCode(ErrorCode::kBadSigns,
                  [&] { fam.Member(std::vector<int>{1, 1}); });
  ExpectErrorCode(ErrorCode::kBadSigns,
                  [&] { fam.Member(std::vector<int>{1, 0, 1}); });
}

TEST(AssouadChi2Test, ReferenceEnvelopeAndSymmetry) {
  const AssouadFamily fam = AssouadFamily::Create(6, 400, 1.0, 0.1);
  const RapporChannel ch = RapporChannel::Create(6, 1.0);
  const std::vector<int> base = {1, -1, 1};
  const AssouadReport r = AssouadChi2Check(fam, ch, base);
  ASSERT_EQ(r.neighbors.size(), 3u);
  const std::vector<double> law = ReportLaw(fam.Member(base), ch.lambda());
  for (const AssouadNeighbor& nb : r.neighbors) {
    std::vector<int> s = base;
    s[nb.flipped] = -s[nb.flipped];
    const std::vector<double> other = ReportLaw(fam.Member(s), ch.lambda());
    EXPECT_NEAR(nb.chi2_forward, ChiSquareOracle(law, other), 1e-15);
    EXPECT_NEAR(nb.chi2_backward, ChiSquareOracle(other, law), 1e-15);
    EXPECT_LE(nb.chi2_forward, kAssouadEnvelope * fam.gamma() * fam.gamma());
  }
  EXPECT_LE(r.constant, kAssouadEnvelope);
  EXPECT_LE(r.max_asymmetry, 0.1);
}

TEST(AssouadChi2Test, VanishesWithGamma) {
  const RapporChannel ch = RapporChannel::Create(6, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int64_t n : {100, 10000, 1000000, 100000000}) {
    const AssouadReport r =
        AssouadChi2Check(AssouadFamily::Create(6, n, 1.0, 0.1), ch);
    EXPECT_LT(r.max_chi2, prev);
    prev = r.max_chi2;
  }
  EXPECT_LT(prev, 1e-9);
}

}  // namespace
}  // namespace ldp_robust
