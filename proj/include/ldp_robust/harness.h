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

// Seeded Monte Carlo sweeps over (n, k, d, alpha, eps), CSV persistence and
// log-log rate fits.

#ifndef LDP_ROBUST_HARNESS_H_
#define LDP_ROBUST_HARNESS_H_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ldp_robust/adversary.h"
#include "ldp_robust/channel.h"
#include "ldp_robust/error.h"
#include "ldp_robust/estimator.h"
#include "ldp_robust/lowerbound.h"
#include "ldp_robust/prob.h"
#include "ldp_robust/rng.h"

namespace ldp_robust {

struct Cell {
  int64_t n = 0;
  int64_t k = 0;
  int d = 0;
  double alpha = 0.0;
  double eps = 0.0;
};

// How the true distribution of a trial is chosen.
enum class PFamily { kUniform, kDirichlet, kPointHeavy };

inline PFamily ParsePFamily(const std::string& name) {
  if (name == "uniform") return PFamily::kUniform;
  if (name == "dirichlet") return PFamily::kDirichlet;
  if (name == "point_heavy") return PFamily::kPointHeavy;
  internal::Fail(ErrorCode::kInvalidConfig, "unknown p_family '" + name + "'");
}

inline ProbVector SampleTruth(PFamily family, int d, const RngSeed& seed) {
  switch (family) {
    case PFamily::kUniform:
      return ProbVector::Uniform(d);
    case PFamily::kPointHeavy: {
      // Half the mass on symbol 0, the rest spread evenly.
      std::vector<double> w(d, 0.5 / (d - 1));
      w[0] = 0.5;
      return ProbVector::Make(w);
    }
    case PFamily::kDirichlet: {
      Engine engine = MakeEngine(seed);
      std::gamma_distribution<double> gamma(1.0, 1.0);
      std::vector<double> w(d);
      double sum = 0.0;
      for (double& x : w) sum += (x = gamma(engine));
      for (double& x : w) x /= sum;
      return ProbVector::Make(w);
    }
  }
  internal::Fail(ErrorCode::kInvalidConfig, "unknown p_family");
}

// Attack by name, with free-form JSON parameters. "none" adds no adversarial
// batches; "shift" swaps in q = p + (c / sqrt(k)) (+1, -1, +1, -1, ..., 0),
// a distribution the filter cannot tell from clean data.
struct AttackConfig {
  std::string name = "none";
  nlohmann::json params = nlohmann::json::object();
};

inline bool IsKnownAttack(const std::string& name) {
  static const char* kNames[] = {"none",     "all_ones",  "all_zeros", "swap",
                                 "targeted", "hard_pair", "shift"};
  return std::find(std::begin(kNames), std::end(kNames), name) !=
         std::end(kNames);
}

struct SweepConfig {
  std::vector<int64_t> n;
  std::vector<int64_t> k;
  std::vector<int> d;
  std::vector<double> alpha;
  std::vector<double> eps;
  AttackConfig attack;
  int trials = 1;
  uint64_t seed = 0;
  PFamily p_family = PFamily::kUniform;
  EstimatorConfig estimator;  // eps is taken from each cell
  std::string out;
  int threads = 1;
  bool record_wall_time = false;

  void Validate() const {
    auto require = [](bool ok, const std::string& msg) {
      internal::Require(ok, ErrorCode::kInvalidConfig, msg);
    };
    require(!n.empty() && !k.empty() && !d.empty() && !alpha.empty() &&
                !eps.empty(),
            "every grid must be nonempty");
    require(trials >= 1, "trials must be >= 1");
    require(threads >= 0, "threads must be >= 0");
    require(IsKnownAttack(attack.name), "unknown attack '" + attack.name + "'");
    for (int64_t x : n) require(x >= 2, "n must be >= 2");
    for (int64_t x : k) require(x >= 1, "k must be >= 1");
    for (int x : d) require(x >= 3 && x <= kMaxChannelDimension, "bad d");
    for (double x : alpha) require(x > 0.0 && x <= kMaxAlpha, "bad alpha");
    for (double x : eps) require(x >= 0.0 && x < 0.25, "eps must be in [0, 1/4)");
  }

  // Cells in row-major order over (n, k, d, alpha, eps).
  std::vector<Cell> Cells() const {
    std::vector<Cell> cells;
    for (int64_t nn : n)
      for (int64_t kk : k)
        for (int dd : d)
          for (double a : alpha)
            for (double e : eps) cells.push_back(Cell{nn, kk, dd, a, e});
    return cells;
  }
};

namespace internal {

template <typename T>
std::vector<T> GridFrom(const nlohmann::json& j, const char* key) {
  Require(j.contains(key), ErrorCode::kInvalidConfig,
          std::string("missing grid '") + key + "'");
  const nlohmann::json& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

}  // namespace internal

inline void ApplyEstimatorOverrides(const nlohmann::json& j,
                                    EstimatorConfig& cfg) {
  if (j.contains("tau_threshold")) cfg.tau_threshold = j.at("tau_threshold");
  if (j.contains("special_gap_threshold"))
    cfg.special_gap_threshold = j.at("special_gap_threshold");
  if (j.contains("rank")) cfg.sdp.rank = j.at("rank");
  if (j.contains("restarts")) cfg.sdp.restarts = j.at("restarts");
  if (j.contains("sweep_tol")) cfg.sdp.sweep_tol = j.at("sweep_tol");
  if (j.contains("max_sweeps")) cfg.sdp.max_sweeps = j.at("max_sweeps");
  if (j.contains("max_iterations")) cfg.max_iterations = j.at("max_iterations");
}

inline SweepConfig ParseSweepConfig(const nlohmann::json& j) {
  SweepConfig cfg;
  try {
    cfg.n = internal::GridFrom<int64_t>(j, "n");
    cfg.k = internal::GridFrom<int64_t>(j, "k");
    cfg.d = internal::GridFrom<int>(j, "d");
    cfg.alpha = internal::GridFrom<double>(j, "alpha");
    cfg.eps = internal::GridFrom<double>(j, "eps");
    if (j.contains("attack")) {
      const nlohmann::json& a = j.at("attack");
      if (a.is_string()) {
        cfg.attack.name = a.get<std::string>();
      } else {
        cfg.attack.name = a.at("name").get<std::string>();
        if (a.contains("params")) cfg.attack.params = a.at("params");
      }
    }
    cfg.trials = j.value("trials", 1);
    cfg.seed = j.value("seed", uint64_t{0});
    cfg.p_family = ParsePFamily(j.value("p_family", std::string("uniform")));
    if (j.contains("estimator"))
      ApplyEstimatorOverrides(j.at("estimator"), cfg.estimator);
    cfg.out = j.value("out", std::string());
    cfg.threads = j.value("threads", 1);
    cfg.record_wall_time = j.value("record_wall_time", false);
  } catch (const nlohmann::json::exception& e) {
    internal::Fail(ErrorCode::kInvalidConfig, e.what());
  }
  cfg.Validate();
  return cfg;
}

inline SweepConfig LoadSweepConfig(const std::string& path) {
  std::ifstream f(path);
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    internal::Fail(ErrorCode::kInvalidConfig, e.what());
  }
  return ParseSweepConfig(j);
}

struct TrialResult {
  Cell cell;
  std::string attack;
  int trial = 0;
  uint64_t seed = 0;
  double l1_robust = 0.0;
  double l1_robust_norm = 0.0;
  double l1_naive = 0.0;
  int64_t deleted_good = 0;
  int64_t deleted_bad = 0;
  int64_t iterations = 0;
  double final_tau = 0.0;
  double first_tau = 0.0;
  double wall_ms = 0.0;
};

// Truth and attack for one trial.
struct TrialSetup {
  ProbVector p;
  std::optional<AttackSpec> attack;
};

inline TrialSetup MakeTrialSetup(const Cell& cell, const AttackConfig& attack,
                                 PFamily family, const RapporChannel& ch,
                                 const RngSeed& seed) {
  const nlohmann::json& params = attack.params;
  ProbVector p = SampleTruth(family, cell.d, seed.Child(1));
  if (attack.name == "none") return {p, std::nullopt};
  if (attack.name == "all_ones") return {p, AllOnesAttack{}};
  if (attack.name == "all_zeros") return {p, AllZerosAttack{}};
  if (attack.name == "swap") {
    std::vector<double> q(cell.d, 1.0 / cell.d);
    if (params.contains("q")) q = params.at("q").get<std::vector<double>>();
    internal::Require(q.size() == static_cast<size_t>(cell.d),
                      ErrorCode::kInvalidAttackParams, "swap q has wrong length");
    return {p, SwapDistributionAttack{ProbVector::Make(q)}};
  }
  if (attack.name == "targeted") {
    std::vector<int> members{0};
    if (params.contains("subset"))
      members = params.at("subset").get<std::vector<int>>();
    TargetedSubsetAttack t{SubsetMask::FromIndices(cell.d, members),
                           params.value("direction", 1),
                           params.value("magnitude", 1.0)};
    return {p, t};
  }
  if (attack.name == "hard_pair") {
    const double pair_eps = cell.eps > 0.0 ? cell.eps : 0.1;
    HardPair pair = MakeHardPair(ch, pair_eps, static_cast<int>(cell.k),
                                 seed.Child(5),
                                 params.value("gaussian_samples", 10000));
    ProbVector truth = pair.p;
    return {truth, HardPairSwapAttack{std::move(pair)}};
  }
  if (attack.name == "shift") {
    const double c = params.value("c", 1.0);
    const double step = c / std::sqrt(static_cast<double>(cell.k));
    std::vector<double> q = p.weights();
    for (int j = 0; j + 1 < cell.d; j += 2) {
      q[j] += step;
      q[j + 1] -= step;
    }
    for (double x : q)
      internal::Require(x >= 0.0, ErrorCode::kInvalidAttackParams,
                        "shift leaves the simplex; lower c");
    return {p, SwapDistributionAttack{ProbVector::Make(q)}};
  }
  internal::Fail(ErrorCode::kInvalidConfig,
                 "unknown attack '" + attack.name + "'");
}

// Trial seed for (master, cell index, trial index).
inline RngSeed TrialSeed(uint64_t master, size_t cell_index, int trial) {
  return RngSeed{master, 0}.Child(cell_index).Child(
      static_cast<uint64_t>(trial));
}

inline TrialResult RunTrial(const Cell& cell, const AttackConfig& attack,
                            PFamily family, const EstimatorConfig& est,
                            int trial, const RngSeed& seed,
                            bool record_wall_time = false,
                            BatchCollection* collection_out = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const RapporChannel ch = RapporChannel::Create(cell.d, cell.alpha);
  const TrialSetup setup = MakeTrialSetup(cell, attack, family, ch, seed);
  BatchCollection collection;
  if (setup.attack) {
    const int64_t n_clean = cell.n - AdversarialCount(cell.n, cell.eps);
    const BatchCollection clean =
        MakeCleanCollection(ch, setup.p, n_clean, cell.k, seed.Child(2));
    collection = Contaminate(clean, *setup.attack, cell.eps, cell.n, ch,
                             seed.Child(3));
  } else {
    collection = MakeCleanCollection(ch, setup.p, cell.n, cell.k, seed.Child(2));
  }
  EstimatorConfig cfg = est;
  cfg.eps = cell.eps;
  const EstimateResult robust = RobustEstimate(collection, cfg, ch,
                                               seed.Child(4));
  const EstimateResult naive = NaiveEstimate(collection, ch);

  TrialResult r;
  r.cell = cell;
  r.attack = attack.name;
  r.trial = trial;
  r.seed = seed.seed;
  r.l1_robust = L1Dist(robust.phat, setup.p.weights());
  r.l1_robust_norm = L1Dist(robust.phat_normalized, setup.p.weights());
  r.l1_naive = L1Dist(naive.phat, setup.p.weights());
  for (const TraceEntry& e : robust.trace) {
    for (int64_t b : e.deleted) {
      if (collection.truth()[b] == BatchLabel::kAdversarial) {
        ++r.deleted_bad;
      } else {
        ++r.deleted_good;
      }
    }
  }
  r.iterations = robust.iterations();
  r.final_tau = robust.final_tau();
  r.first_tau = robust.trace.empty() ? 0.0 : robust.trace.front().tau;
  if (collection_out != nullptr) *collection_out = std::move(collection);
  if (record_wall_time) {
    r.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  }
  return r;
}

inline constexpr char kCsvHeader[] =
    "n,k,d,alpha,eps,attack,trial,seed,l1_robust,l1_robust_norm,l1_naive,"
    "deleted_good,deleted_bad,iterations,final_tau,wall_ms";

inline std::string FormatReal(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string CsvRow(const TrialResult& r) {
  std::ostringstream s;
  s << r.cell.n << ',' << r.cell.k << ',' << r.cell.d << ','
    << FormatReal(r.cell.alpha) << ',' << FormatReal(r.cell.eps) << ','
    << r.attack << ',' << r.trial << ',' << r.seed << ','
    << FormatReal(r.l1_robust) << ',' << FormatReal(r.l1_robust_norm) << ','
    << FormatReal(r.l1_naive) << ',' << r.deleted_good << ',' << r.deleted_bad
    << ',' << r.iterations << ',' << FormatReal(r.final_tau) << ','
    << FormatReal(r.wall_ms);
  return s.str();
}

inline std::string ToCsv(const std::vector<TrialResult>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const TrialResult& r : rows) out += CsvRow(r) + "\n";
  return out;
}

inline int ResolveThreads(int threads) {
  if (threads > 0) return threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs every (cell, trial) on a pool of worker threads. Results come back in
// (cell, trial) order whatever the completion order.
inline std::vector<TrialResult> RunSweep(const SweepConfig& cfg) {
  cfg.Validate();
  const std::vector<Cell> cells = cfg.Cells();
  const size_t jobs = cells.size() * static_cast<size_t>(cfg.trials);
  std::vector<TrialResult> results(jobs);
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (size_t job = next++; job < jobs; job = next++) {
      const size_t cell_index = job / cfg.trials;
      const int trial = static_cast<int>(job % cfg.trials);
      try {
        results[job] = RunTrial(cells[cell_index], cfg.attack, cfg.p_family,
                                cfg.estimator, trial,
                                TrialSeed(cfg.seed, cell_index, trial),
                                cfg.record_wall_time);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  const int threads = std::min<int>(ResolveThreads(cfg.threads),
                                    static_cast<int>(std::max<size_t>(jobs, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

inline void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "cannot open " + path);
  f << text;
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "write failed for " + path);
}

// Validates the config (before any I/O), runs it and writes the CSV to
// cfg.out.
inline std::vector<TrialResult> Sweep(const SweepConfig& cfg) {
  cfg.Validate();
  internal::Require(!cfg.out.empty(), ErrorCode::kIoError, "no output path");
  std::vector<TrialResult> rows = RunSweep(cfg);
  WriteText(cfg.out, ToCsv(rows));
  return rows;
}

inline std::vector<TrialResult> ParseCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  internal::Require(static_cast<bool>(std::getline(in, line)) &&
                        line == kCsvHeader,
                    ErrorCode::kFormatError, "missing or unexpected CSV header");
  std::vector<TrialResult> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    internal::Require(f.size() == 16, ErrorCode::kFormatError,
                      "CSV row does not have 16 fields");
    try {
      TrialResult r;
      r.cell = Cell{std::stoll(f[0]), std::stoll(f[1]), std::stoi(f[2]),
                    std::stod(f[3]), std::stod(f[4])};
      r.attack = f[5];
      r.trial = std::stoi(f[6]);
      r.seed = std::stoull(f[7]);
      r.l1_robust = std::stod(f[8]);
      r.l1_robust_norm = std::stod(f[9]);
      r.l1_naive = std::stod(f[10]);
      r.deleted_good = std::stoll(f[11]);
      r.deleted_bad = std::stoll(f[12]);
      r.iterations = std::stoll(f[13]);
      r.final_tau = std::stod(f[14]);
      r.wall_ms = std::stod(f[15]);
      rows.push_back(r);
    } catch (const std::exception& e) {
      internal::Fail(ErrorCode::kFormatError, e.what());
    }
  }
  return rows;
}

inline std::vector<TrialResult> ReadCsv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return ParseCsv(buf.str());
}

inline double Median(std::vector<double> v) {
  internal::Require(!v.empty(), ErrorCode::kInsufficientData, "empty sample");
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

enum class RateAxis { kN, kK, kEps };

inline RateAxis ParseRateAxis(const std::string& name) {
  if (name == "n") return RateAxis::kN;
  if (name == "k") return RateAxis::kK;
  if (name == "eps") return RateAxis::kEps;
  internal::Fail(ErrorCode::kInvalidArgument, "axis must be n, k or eps");
}

struct RateFitReport {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::vector<double> axis_values;
  std::vector<double> medians;  // median l1_robust_norm per axis value
};

// Least-squares slope of log(median l1_robust_norm) against log(axis).
inline RateFitReport RateFit(const std::vector<TrialResult>& rows,
                             RateAxis axis) {
  std::map<double, std::vector<double>> groups;
  for (const TrialResult& r : rows) {
    const double x = axis == RateAxis::kN   ? static_cast<double>(r.cell.n)
                     : axis == RateAxis::kK ? static_cast<double>(r.cell.k)
                                            : r.cell.eps;
    groups[x].push_back(r.l1_robust_norm);
  }
  internal::Require(groups.size() >= 3, ErrorCode::kInsufficientData,
                    "need at least three distinct axis values");
  RateFitReport rep;
  for (auto& [x, errs] : groups) {
    internal::Require(x > 0.0, ErrorCode::kInsufficientData,
                      "axis values must be positive for a log-log fit");
    rep.axis_values.push_back(x);
    rep.medians.push_back(Median(errs));
  }
  const size_t m = rep.axis_values.size();
  double sx = 0, sy = 0;
  std::vector<double> lx(m), ly(m);
  for (size_t i = 0; i < m; ++i) {
    lx[i] = std::log(rep.axis_values[i]);
    ly[i] = std::log(rep.medians[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  rep.slope = sxy / sxx;
  rep.intercept = my - rep.slope * mx;
  double rss = 0;
  for (size_t i = 0; i < m; ++i) {
    const double e = ly[i] - rep.intercept - rep.slope * lx[i];
    rss += e * e;
  }
  rep.stderr_slope = std::sqrt(rss / (m - 2) / sxx);
  return rep;
}

// Solves n = 4 d / (e'^2 ln(1 / e')) for e' in (1e-6, 1/100] by bisection.
inline double EpsPrimeSolve(double n, int d) {
  auto f = [d](double e) { return 4.0 * d / (e * e * std::log(1.0 / e)); };
  double lo = 1e-6, hi = 0.01;
  internal::Require(n >= f(hi) && n < f(lo), ErrorCode::kNoRoot,
                    "no eps' in (1e-6, 0.01] for this n");
  if (n == f(hi)) return hi;
  // f is decreasing on the bracket.
  while ((hi - lo) > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > n) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline nlohmann::json RealOrNull(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

inline nlohmann::json TrialToJson(const TrialResult& r) {
  return nlohmann::json{
      {"n", r.cell.n},
      {"k", r.cell.k},
      {"d", r.cell.d},
      {"alpha", r.cell.alpha},
      {"eps", r.cell.eps},
      {"attack", r.attack},
      {"trial", r.trial},
      {"seed", r.seed},
      {"l1_robust", r.l1_robust},
      {"l1_robust_norm", r.l1_robust_norm},
      {"l1_naive", r.l1_naive},
      {"deleted_good", r.deleted_good},
      {"deleted_bad", r.deleted_bad},
      {"iterations", r.iterations},
      {"final_tau", RealOrNull(r.final_tau)},
      {"first_tau", RealOrNull(r.first_tau)},
      {"wall_ms", r.wall_ms},
  };
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_HARNESS_H_
