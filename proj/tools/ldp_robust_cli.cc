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

// Command-line front end. Exit status: 0 success, 1 usage or I/O error,
// 2 when a checked invariant is violated.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldp_robust/collection_io.h"
#include "ldp_robust/estimator.h"
#include "ldp_robust/gram.h"
#include "ldp_robust/harness.h"
#include "ldp_robust/lowerbound.h"

namespace {

using nlohmann::json;
namespace lr = ::ldp_robust;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

// Envelope on max chi2 / (alpha^2 gamma^2) for neighboring Assouad members.
constexpr double kAssouadEnvelope = 50.0;

struct CommonFlags {
  uint64_t seed = 0;
  std::string config;
  std::string out;
  int threads = 1;
};

void AddCommonFlags(CLI::App* app, CommonFlags& flags) {
  app->add_option("--seed", flags.seed, "Master seed");
  app->add_option("--config", flags.config, "JSON config file");
  app->add_option("--out", flags.out, "Output file (default: stdout)");
  app->add_option("--threads", flags.threads, "Worker threads, 0 = auto")
      ->check(CLI::NonNegativeNumber);
}

void Emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  lr::WriteText(out, text);
}

void EmitJson(const json& j, const std::string& out) {
  Emit(j.dump(2) + "\n", out);
}

json ReadJsonFile(const std::string& path) {
  std::ifstream f(path);
  lr::internal::Require(static_cast<bool>(f), lr::ErrorCode::kIoError,
                        "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    lr::internal::Fail(lr::ErrorCode::kInvalidConfig, e.what());
  }
}

json VectorJson(const std::vector<double>& v) { return json(v); }

// ---- simulate ------------------------------------------------------------

struct SimulateFlags {
  CommonFlags common;
  int64_t n = 2000;
  int64_t k = 50;
  int d = 5;
  double alpha = 1.0;
  double eps = 0.05;
  std::string attack = "all_ones";
  std::string p_family = "uniform";
  int trial = 0;
  double tau_threshold = lr::kDefaultTauThreshold;
  std::string save_collection;
};

int RunSimulate(const SimulateFlags& f) {
  lr::Cell cell{f.n, f.k, f.d, f.alpha, f.eps};
  lr::AttackConfig attack;
  attack.name = f.attack;
  lr::PFamily family = lr::ParsePFamily(f.p_family);
  lr::EstimatorConfig est;
  est.tau_threshold = f.tau_threshold;
  uint64_t seed = f.common.seed;
  if (!f.common.config.empty()) {
    // Single-cell form of the sweep schema: scalar grids.
    const json j = ReadJsonFile(f.common.config);
    const lr::SweepConfig cfg = lr::ParseSweepConfig(j);
    cell = cfg.Cells().front();
    attack = cfg.attack;
    family = cfg.p_family;
    est = cfg.estimator;
    if (j.contains("seed")) seed = cfg.seed;
  }
  lr::internal::Require(lr::IsKnownAttack(attack.name),
                        lr::ErrorCode::kInvalidConfig, "unknown attack");
  lr::BatchCollection collection;
  const lr::TrialResult r = lr::RunTrial(
      cell, attack, family, est, f.trial, lr::TrialSeed(seed, 0, f.trial),
      false, f.save_collection.empty() ? nullptr : &collection);
  if (!f.save_collection.empty())
    lr::WriteCollection(collection, f.save_collection);
  EmitJson(lr::TrialToJson(r), f.common.out);
  return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

int RunSweepCommand(const CommonFlags& f, bool seed_given, bool threads_given) {
  lr::internal::Require(!f.config.empty(), lr::ErrorCode::kInvalidConfig,
                        "sweep needs --config");
  lr::SweepConfig cfg = lr::LoadSweepConfig(f.config);
  if (!f.out.empty()) cfg.out = f.out;
  if (seed_given) cfg.seed = f.seed;
  if (threads_given) cfg.threads = f.threads;
  const std::vector<lr::TrialResult> rows = lr::Sweep(cfg);
  std::cerr << "wrote " << rows.size() << " rows to " << cfg.out << "\n";
  return kExitOk;
}

// ---- sdp-check -----------------------------------------------------------

struct SdpCheckFlags {
  CommonFlags common;
  int d = 8;
  int instances = 200;
};

int RunSdpCheck(const SdpCheckFlags& f) {
  lr::internal::Require(f.d >= 3 && f.d <= lr::kMaxSubsetOracleDimension,
                        lr::ErrorCode::kInvalidArgument, "d must be in [3, 22]");
  lr::internal::Require(f.instances >= 1, lr::ErrorCode::kInvalidArgument,
                        "instances must be >= 1");
  const lr::RngSeed root{f.common.seed, 0};
  std::vector<lr::SandwichReport> reports(f.instances);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < f.instances; i = next++) {
      lr::Engine engine = lr::MakeEngine(root.Child(0).Stream(i));
      std::normal_distribution<double> normal;
      Eigen::MatrixXd a(f.d, f.d);
      for (int r = 0; r < f.d; ++r)
        for (int c = r; c < f.d; ++c) a(r, c) = a(c, r) = normal(engine);
      const lr::SymMatrix sym = lr::SymMatrix::Make(a);
      const lr::GramSolution sol = lr::GramMaximize(sym, root.Child(1).Stream(i));
      reports[i] = lr::SandwichCheck(sym, sol);
    }
  };
  const int threads = std::min(lr::ResolveThreads(f.common.threads),
                               f.instances);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  int violations = 0;
  double min_lower = 1e300, min_upper = 1e300, max_ratio = 0.0;
  for (const lr::SandwichReport& r : reports) {
    if (!r.ok()) ++violations;
    min_lower = std::min(min_lower, r.lower_margin);
    min_upper = std::min(min_upper, r.upper_margin);
    if (r.oracle > 0.0) max_ratio = std::max(max_ratio, r.gram / r.oracle);
  }
  EmitJson(json{{"d", f.d},
                {"instances", f.instances},
                {"seed", f.common.seed},
                {"violations", violations},
                {"min_lower_margin", min_lower},
                {"min_upper_margin", min_upper},
                {"max_gram_over_oracle", max_ratio}},
           f.common.out);
  return violations == 0 ? kExitOk : kExitViolation;
}

// ---- lowerbound ----------------------------------------------------------

struct LowerBoundFlags {
  CommonFlags common;
  int d = 8;
  double alpha = 1.0;
  int k = 100;
  double eps = 0.1;
  int gaussian_samples = 10000;
};

json HardPairJson(const lr::HardPair& pair, const lr::HardPairReport& rep) {
  return json{
      {"p", VectorJson(pair.p.weights())},
      {"q", VectorJson(pair.q.weights())},
      {"delta", VectorJson(pair.delta)},
      {"eps", pair.eps},
      {"k", pair.k},
      {"alpha", pair.alpha},
      {"l1", pair.l1()},
      {"chi2_one_sample", pair.chi2_one_sample},
      {"quad_form", pair.quad_form},
      {"tv_bound_k", pair.tv_bound_k},
      {"checks",
       {{"sum_residual", rep.sum_residual},
        {"sum_zero", rep.sum_zero},
        {"quad_form_bound", rep.quad_form_bound},
        {"quad_form_ok", rep.quad_form_ok},
        {"chi2_bound", rep.chi2_bound},
        {"chi2_ok", rep.chi2_ok},
        {"tv_ok", rep.tv_ok},
        {"l1_over_rate", rep.l1_over_rate}}},
  };
}

int RunLowerBound(const LowerBoundFlags& f) {
  const lr::RapporChannel ch = lr::RapporChannel::Create(f.d, f.alpha);
  const lr::HardPair pair = lr::MakeHardPair(ch, f.eps, f.k,
                                             lr::RngSeed{f.common.seed, 0},
                                             f.gaussian_samples);
  const lr::OmegaMatrix omega = lr::ComputeOmega(ch);
  const lr::HardPairReport rep = lr::CheckHardPair(pair, omega);
  json j = HardPairJson(pair, rep);
  j["rate_ceiling"] = lr::HardPairRateCeiling(f.d, f.alpha, f.eps, f.k);
  j["low_eigen_count"] = lr::LowEigenCount(omega);
  EmitJson(j, f.common.out);
  return rep.all_ok() ? kExitOk : kExitViolation;
}

// ---- mixture-check -------------------------------------------------------

struct MixtureFlags {
  CommonFlags common;
  int d = 3;
  int k = 2;
  double alpha = 1.0;
  double eps = 0.1;
  int gaussian_samples = 10000;
};

int RunMixtureCheck(const MixtureFlags& f) {
  const lr::RapporChannel ch = lr::RapporChannel::Create(f.d, f.alpha);
  const lr::HardPair pair = lr::MakeHardPair(ch, f.eps, f.k,
                                             lr::RngSeed{f.common.seed, 0},
                                             f.gaussian_samples);
  const lr::CommonMixture mix = lr::MakeCommonMixture(pair, ch, f.k);
  const bool ok = mix.max_residual <= 1e-12 && mix.min_mass >= -1e-12;
  EmitJson(json{{"d", f.d},
                {"k", f.k},
                {"alpha", f.alpha},
                {"eps", f.eps},
                {"outcomes", mix.a.size()},
                {"tv_product", mix.tv},
                {"max_residual", mix.max_residual},
                {"min_mass", mix.min_mass},
                {"ok", ok}},
           f.common.out);
  return ok ? kExitOk : kExitViolation;
}

// ---- assouad -------------------------------------------------------------

struct AssouadFlags {
  CommonFlags common;
  int d = 6;
  int64_t n = 400;
  double alpha = 1.0;
  double c_gamma = 0.1;
};

int RunAssouad(const AssouadFlags& f) {
  const lr::AssouadFamily family =
      lr::AssouadFamily::Create(f.d, f.n, f.alpha, f.c_gamma);
  const lr::RapporChannel ch = lr::RapporChannel::Create(f.d, f.alpha);
  const lr::AssouadReport rep = lr::AssouadChi2Check(family, ch);
  json neighbors = json::array();
  for (const lr::AssouadNeighbor& nb : rep.neighbors) {
    neighbors.push_back({{"flipped", nb.flipped},
                         {"chi2_forward", nb.chi2_forward},
                         {"chi2_backward", nb.chi2_backward},
                         {"tv_bound_n", nb.tv_bound_n}});
  }
  const bool ok = rep.constant <= kAssouadEnvelope;
  EmitJson(json{{"d", f.d},
                {"n", f.n},
                {"alpha", f.alpha},
                {"c_gamma", f.c_gamma},
                {"gamma", family.gamma()},
                {"log2_family_size", family.log2_size()},
                {"base_member", VectorJson(family.Member(
                                    std::vector<int>(family.half(), 1))
                                                .weights())},
                {"neighbors", neighbors},
                {"max_chi2", rep.max_chi2},
                {"constant", rep.constant},
                {"envelope", kAssouadEnvelope},
                {"max_asymmetry", rep.max_asymmetry},
                {"ok", ok}},
           f.common.out);
  return ok ? kExitOk : kExitViolation;
}

// ---- rate-fit ------------------------------------------------------------

int RunRateFit(const std::string& csv, const std::string& axis,
               const std::string& out) {
  const lr::RateFitReport rep =
      lr::RateFit(lr::ReadCsv(csv), lr::ParseRateAxis(axis));
  EmitJson(json{{"axis", axis},
                {"slope", rep.slope},
                {"stderr", rep.stderr_slope},
                {"intercept", rep.intercept},
                {"axis_values", rep.axis_values},
                {"medians", rep.medians}},
           out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust distribution estimation from privatized batches"};
  app.require_subcommand(1);

  SimulateFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one trial");
  AddCommonFlags(simulate, sim.common);
  simulate->add_option("--n", sim.n);
  simulate->add_option("--k", sim.k);
  simulate->add_option("--d", sim.d);
  simulate->add_option("--alpha", sim.alpha);
  simulate->add_option("--eps", sim.eps);
  simulate->add_option("--attack", sim.attack);
  simulate->add_option("--p-family", sim.p_family);
  simulate->add_option("--trial", sim.trial);
  simulate->add_option("--tau-threshold", sim.tau_threshold);
  simulate->add_option("--save-collection", sim.save_collection,
                       "Write the contaminated collection in binary form");

  CommonFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a sweep config to CSV");
  AddCommonFlags(sweep, sweep_flags);

  SdpCheckFlags sdp;
  CLI::App* sdp_check =
      app.add_subcommand("sdp-check", "Random-matrix sandwich suite");
  AddCommonFlags(sdp_check, sdp.common);
  sdp_check->add_option("--d", sdp.d);
  sdp_check->add_option("--instances", sdp.instances);

  LowerBoundFlags lb;
  CLI::App* lowerbound =
      app.add_subcommand("lowerbound", "Emit a hard-pair certificate");
  AddCommonFlags(lowerbound, lb.common);
  lowerbound->add_option("--d", lb.d);
  lowerbound->add_option("--alpha", lb.alpha);
  lowerbound->add_option("--k", lb.k);
  lowerbound->add_option("--eps", lb.eps);
  lowerbound->add_option("--gaussian-samples", lb.gaussian_samples);

  MixtureFlags mix;
  CLI::App* mixture =
      app.add_subcommand("mixture-check", "Common-mixture residual report");
  AddCommonFlags(mixture, mix.common);
  mixture->add_option("--d", mix.d);
  mixture->add_option("--k", mix.k);
  mixture->add_option("--alpha", mix.alpha);
  mixture->add_option("--eps", mix.eps);
  mixture->add_option("--gaussian-samples", mix.gaussian_samples);

  AssouadFlags as;
  CLI::App* assouad =
      app.add_subcommand("assouad", "Assouad family and chi-square report");
  AddCommonFlags(assouad, as.common);
  assouad->add_option("--d", as.d);
  assouad->add_option("--n", as.n);
  assouad->add_option("--alpha", as.alpha);
  assouad->add_option("--c-gamma", as.c_gamma);

  std::string fit_csv, fit_axis = "n", fit_out;
  CLI::App* rate_fit =
      app.add_subcommand("rate-fit", "Log-log slope of a sweep CSV");
  rate_fit->add_option("--csv", fit_csv)->required();
  rate_fit->add_option("--axis", fit_axis);
  rate_fit->add_option("--out", fit_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return RunSimulate(sim);
    if (*sweep) {
      return RunSweepCommand(sweep_flags, sweep->count("--seed") > 0,
                             sweep->count("--threads") > 0);
    }
    if (*sdp_check) return RunSdpCheck(sdp);
    if (*lowerbound) return RunLowerBound(lb);
    if (*mixture) return RunMixtureCheck(mix);
    if (*assouad) return RunAssouad(as);
    if (*rate_fit) return RunRateFit(fit_csv, fit_axis, fit_out);
  } catch (const lr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
