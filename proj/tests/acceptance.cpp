// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "polylab/engine.hpp"
#include "polylab/env.hpp"
#include "polylab/functionals.hpp"
#include "polylab/harness.hpp"

using namespace polylab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PolymerInstance make(int d, int n, double beta, std::uint64_t seed) {
  PolymerInstance inst;
  inst.d = d;
  inst.n = n;
  inst.beta = beta;
  inst.seed = seed;
  return inst;
}

ExperimentConfig figure1_config() {
  ExperimentConfig c;
  c.d = 1;
  c.n = 300;
  c.beta = 3.0;
  c.replications = 1000;
  c.base_seed = 1;
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const int ns[] = {4, 8, 12};
  const double betas[] = {0.0, 1.0, 3.0};
  double theta_err = 0.0, rho_err = 0.0, ell_err = 0.0, z_err = 0.0;
  for (int i = 0; i < 25; ++i) {
    const auto inst = make(1, ns[i % 3], betas[(i / 3) % 3], 1000 + static_cast<std::uint64_t>(i));
    const auto sol = forward_backward(inst);
    const auto bf = brute_force(inst);
    for (int k = 1; k <= inst.n; ++k) {
      for (const auto& x : reachable_sites(1, k)) {
        theta_err = std::max(theta_err, std::abs(sol.theta_at(k, x) - bf.theta_at(k, x)));
      }
    }
    rho_err = std::max(rho_err, std::abs(rho(sol) - bf.rho));
    ell_err = std::max(ell_err, std::abs(ell(sol).ell - bf.ell));
    z_err = std::max(z_err, std::abs(sol.log_partition - bf.log_partition));
  }
  const double secs = seconds_since(t0);
  const bool ok = theta_err <= 1e-10 && rho_err <= 1e-10 && ell_err <= 1e-10 && z_err <= 1e-10 && secs < 30.0;
  return {ok, "theta " + fmt("%.2e", theta_err) + ", rho " + fmt("%.2e", rho_err) + ", ell " + fmt("%.2e", ell_err) +
                  ", logZ " + fmt("%.2e", z_err) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome normalization() {
  const auto cfg = figure1_config();
  const auto sol = forward_backward(cfg.instance(0));
  double worst = 0.0;
  for (const auto& layer : sol.theta) worst = std::max(worst, std::abs(layer.sum() - 1.0));
  return {worst <= 1e-10 && sol.theta.size() == 300, "max |sum - 1| = " + fmt("%.2e", worst) + " over 300 layers"};
}

struct ChainStats {
  int instances = 0;
  int chain_violations = 0;
  int floor_violations = 0;
};

const ChainStats& chain_stats() {
  static const ChainStats stats = [] {
    ChainStats s;
    const double betas[] = {0.0, 1.0, 3.0, 6.0};
    const int ns[] = {10, 50, 300};
    for (int i = 0; i < 100; ++i) {
      const int d = 1 + i % 2;
      const int n = ns[(i / 2) % 3];
      const double beta = betas[(i / 6) % 4];
      const auto inst = make(d, n, beta, 5000 + static_cast<std::uint64_t>(i));
      const auto sol = forward_backward(inst);
      const auto alpha = alpha_profile(sol);
      const double r = rho(sol);
      const double l = ell(sol).ell;
      ++s.instances;
      if (!(l * l <= r + 1e-12 && r <= l + 1e-12)) ++s.chain_violations;
      bool floor_ok = r >= 1.0 / (std::pow(3.0, d) * n);
      for (std::size_t k = 0; k < alpha.size(); ++k) {
        floor_ok = floor_ok && alpha[k] >= std::pow(2.0 * static_cast<double>(k + 1) + 1.0, -d);
      }
      if (!floor_ok) ++s.floor_violations;
    }
    return s;
  }();
  return stats;
}

Outcome overlap_chain() {
  const auto& s = chain_stats();
  return {s.chain_violations == 0 && s.instances == 100,
          std::to_string(s.chain_violations) + " violations in " + std::to_string(s.instances) + " instances"};
}

Outcome floor_bounds() {
  const auto& s = chain_stats();
  return {s.floor_violations == 0, std::to_string(s.floor_violations) + " instances below a floor"};
}

Outcome derivative_identity() {
  const auto inst = make(1, 40, 3.0, 40);
  const auto sol = forward_backward(inst);
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  int bad = 0, clamped = 0;
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + static_cast<int>(gen() % 40);
    const auto sites = reachable_sites(1, k);
    const Site& x = sites[gen() % sites.size()];
    const auto c = theta_derivative_check(inst, sol, k, x, 1e-6);
    const double err = std::abs(c.numeric - c.analytic);
    worst = std::max(worst, err / std::max(1.0, c.analytic));
    if (err > 1e-5 * std::max(1.0, c.analytic)) ++bad;
    clamped += c.clamped;
  }
  return {bad == 0, "worst scaled error " + fmt("%.2e", worst) + ", " + std::to_string(clamped) + " clamped"};
}

Outcome zeta_sandwich() {
  bool ok = true;
  int sites = 0, mc_bad = 0;
  for (double beta : {1.0, 3.0}) {
    const auto inst = make(1, 40, beta, 60 + static_cast<std::uint64_t>(beta));
    const auto sol = forward_backward(inst);
    const auto alpha = alpha_profile(sol);
    const double f = std::exp(beta * (inst.law.hi() - inst.law.lo()));
    for (int k = 4; k <= 40; k += 4) {
      const auto zeta = zero_layer_solution(inst, k);
      const auto z = zeta.layer(k).values();
      const auto th = sol.layer(k).values();
      for (std::size_t i = 0; i < z.size(); ++i) {
        ++sites;
        ok = ok && z[i] >= th[i] / f * (1.0 - 1e-9) && z[i] <= th[i] * f * (1.0 + 1e-9);
      }
      const auto est = primed_estimates(inst, k, 200);
      if (!(est.alpha_prime <= f * f * f * f * alpha[static_cast<std::size_t>(k - 1)] + 4.0 * est.alpha_se)) ++mc_bad;
    }
  }
  return {ok && mc_bad == 0, std::to_string(sites) + " sites in 20 layers, " + std::to_string(mc_bad) +
                                 " Monte Carlo bound failures (M = 200)"};
}

Outcome beta_zero_reduction() {
  const int n = 300;
  const auto sol = forward_backward(make(1, n, 0.0, 77));
  const auto table = oracle::srw_table(n);
  double worst = 0.0;
  long double rho_exact = 0.0L;
  for (int k = 1; k <= n; ++k) {
    const auto& row = table[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Site x{2 * static_cast<Coord>(i) - k};
      worst = std::max(worst, std::abs(sol.theta_at(k, x) - static_cast<double>(row[i])));
      rho_exact += row[i] * row[i];
    }
  }
  const double rho_err = std::abs(rho(sol) - static_cast<double>(rho_exact / n));
  return {worst <= 1e-12 && rho_err <= 1e-12, "theta " + fmt("%.2e", worst) + ", rho " + fmt("%.2e", rho_err)};
}

Outcome scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> g1{64, 128, 256, 512, 1024};
  const std::vector<int> g3{8, 16, 32};
  const auto s1 = scaling_study(1, g1);
  const auto s3 = scaling_study(3, g3);
  const double secs = seconds_since(t0);
  const bool ok = s1.slope >= -0.65 && s1.slope <= -0.35 && s3.slope >= -1.3 && s3.slope <= -0.7 && secs < 120.0;
  return {ok, "d=1 slope " + fmt("%.4f", s1.slope) + ", d=3 slope " + fmt("%.4f", s3.slope) + ", " +
                  fmt("%.2f", secs) + " s"};
}

Outcome sampler() {
  const int n = 30;
  const int draws = 50000;
  const auto inst = make(1, n, 3.0, 90);
  const auto sol = forward_backward(inst);
  SplitMix64 rng(derive_seed(inst.seed, 0, static_cast<std::uint64_t>(StreamTag::kPathSampling)));
  std::vector<std::map<Site, int>> visits(static_cast<std::size_t>(n));
  std::vector<PolymerPath> paths;
  paths.reserve(draws);
  for (int i = 0; i < draws; ++i) {
    paths.push_back(sample_path(sol, rng));
    for (int k = 1; k <= n; ++k) ++visits[static_cast<std::size_t>(k - 1)][paths.back().at(k)];
  }
  int total = 0, outside = 0;
  for (int k = 1; k <= n; ++k) {
    for (const auto& x : reachable_sites(1, k)) {
      const double th = sol.theta_at(k, x);
      const double freq = static_cast<double>(visits[static_cast<std::size_t>(k - 1)][x]) / draws;
      const double se = std::sqrt(th * (1.0 - th) / draws);
      ++total;
      if (std::abs(freq - th) > 4.0 * se) ++outside;
    }
  }
  double mean = 0.0, sq = 0.0;
  const int pairs = draws / 2;
  for (int i = 0; i < pairs; ++i) {
    const double o = static_cast<double>(overlap(paths[static_cast<std::size_t>(2 * i)],
                                                 paths[static_cast<std::size_t>(2 * i + 1)])) /
                     n;
    mean += o;
    sq += o * o;
  }
  mean /= pairs;
  const double se = std::sqrt((sq / pairs - mean * mean) / pairs);
  const double r = rho(sol);
  const bool ok = outside <= total / 100 && std::abs(mean - r) <= 4.0 * se;
  return {ok, std::to_string(outside) + "/" + std::to_string(total) + " sites beyond 4 SE; overlap " +
                  fmt("%.5f", mean) + " vs rho " + fmt("%.5f", r) + " (SE " + fmt("%.1e", se) + ")"};
}

std::string figure1_csv;

Outcome figure1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = figure1_config();
  const auto records = run_replications(cfg, worker_count());
  const double secs = seconds_since(t0);
  std::ostringstream os;
  write_report_csv(records, os);
  figure1_csv = os.str();
  const auto s = summarize(records);
  int le_001 = 0;
  bool inside = records.size() == 1000;
  for (const auto& r : records) {
    inside = inside && r.rho > 0.0 && r.rho < 1.0;
    le_001 += r.rho <= 0.01;
  }
  const bool ok = inside && le_001 == 0 && s.max_rho < 1.0 && secs < 300.0;
  return {ok, "rho in [" + fmt("%.4f", s.min_rho) + ", " + fmt("%.4f", s.max_rho) + "], mean " +
                  fmt("%.4f", s.mean_rho) + ", P(rho<=0.01) = " + fmt("%.3f", le_001 / 1000.0) + ", " +
                  std::to_string(worker_count()) + " workers, " + fmt("%.2f", secs) + " s"};
}

Outcome environment_battery() {
  const auto law = EnvironmentLaw::uniform(-1.0, 1.0);
  const auto numeric = EnvironmentLaw::from_density(-1.0, 1.0, [](double) { return 0.5; }, "flat");
  const double h0 = numeric.h(0.0);
  const double k = poincare_constant(law);
  const std::vector<std::pair<RealFn, RealFn>> battery = {
      {[](double x) { return x; }, [](double) { return 1.0; }},
      {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
      {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
      {[](double x) { return std::cos(3.0 * x); }, [](double x) { return -3.0 * std::sin(3.0 * x); }},
  };
  double ibp = 0.0, margin = 1e300;
  for (const auto& [g, gp] : battery) {
    ibp = std::max(ibp, check_ibp(law, g, gp));
    margin = std::min(margin, check_poincare(law, g, gp));
  }
  const MultiFn sum = [](std::span<const double> x) { return x[0] + x[1] + x[2]; };
  const MultiFn one = [](std::span<const double>) { return 1.0; };
  const std::vector<MultiFn> partials{one, one, one};
  const auto tm = check_poincare_tensorized(law, 3, sum, partials, 100000);
  const double kap = kappa(law, 1);
  const double lphi = std::log(phi(law, 1.0 / kap));
  const bool ok = std::abs(h0 - 0.5) <= 1e-8 && std::abs(law.h(0.0) - 0.5) <= 1e-8 && std::abs(k - 0.5) <= 1e-8 &&
                  ibp <= 1e-6 && margin >= -1e-9 && std::abs(tm.margin - 0.5) <= 4.0 * tm.std_error &&
                  lphi <= -4.0 * std::log(2.0) - 4.0 + 1e-6;
  return {ok, "h(0) " + fmt("%.12f", h0) + ", K " + fmt("%.12f", k) + ", IBP " + fmt("%.1e", ibp) + ", margin " +
                  fmt("%.4f", margin) + ", tensorized " + fmt("%.4f", tm.margin) + " (SE " +
                  fmt("%.4f", tm.std_error) + "), kappa " + fmt("%.6e", kap)};
}

Outcome determinism() {
  const auto records = run_replications(figure1_config(), worker_count());
  std::ostringstream os;
  write_report_csv(records, os);
  const bool ok = !figure1_csv.empty() && os.str() == figure1_csv;
  return {ok, std::to_string(os.str().size()) + " bytes, " + (ok ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"normalization", normalization},
      {"ell^2 <= rho <= ell chain", overlap_chain},
      {"alpha and rho floors", floor_bounds},
      {"theta derivative identity", derivative_identity},
      {"zeta sandwich", zeta_sandwich},
      {"beta = 0 reduction", beta_zero_reduction},
      {"scaling slopes", scaling},
      {"sampler correctness", sampler},
      {"figure 1 reproduction", figure1},
      {"environment battery", environment_battery},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
