#include "polylab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "polylab/engine.hpp"
#include "polylab/env.hpp"
#include "polylab/functionals.hpp"
#include "polylab/harness.hpp"
#include "polylab/lattice.hpp"

namespace polylab {

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerifyReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

std::size_t VerifyReport::family_count() const {
  std::set<std::string> f;
  for (const auto& c : checks) f.insert(c.family);
  return f.size();
}

nlohmann::ordered_json VerifyReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed();
  j["families"] = family_count();
  if (const auto* f = first_failure()) {
    j["first_failure"] = f->family + "/" + f->name;
  } else {
    j["first_failure"] = nullptr;
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    arr.push_back({{"family", c.family}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["checks"] = arr;
  return j;
}

double srw_marginal_1d(int k, long long x) {
  if (std::llabs(x) > k || (k + x) % 2 != 0) return 0.0;
  const long long up = (k + x) / 2;
  const long double lg = std::lgamma(static_cast<long double>(k) + 1) - std::lgamma(static_cast<long double>(up) + 1) -
                         std::lgamma(static_cast<long double>(k - up) + 1) - k * std::log(2.0L);
  return static_cast<double>(std::exp(lg));
}

namespace {

class Runner {
 public:
  explicit Runner(VerifyReport& report) : report_(report) {}

  void add(const std::string& family, const std::string& name, bool ok, const std::string& detail) {
    report_.checks.push_back({family, name, ok, detail});
  }

  // Runs fn, recording an exception as a failed check.
  template <class Fn>
  void guarded(const std::string& family, const std::string& name, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(family, name, false, std::string("exception: ") + e.what());
    }
  }

 private:
  VerifyReport& report_;
};

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

PolymerInstance uniform_instance(int d, int n, double beta, std::uint64_t seed) {
  return PolymerInstance{d, n, beta, EnvironmentLaw::uniform(-1.0, 1.0), seed, false};
}

void env_checks(Runner& run) {
  const auto uniform = EnvironmentLaw::uniform(-1.0, 1.0);
  const auto bump = EnvironmentLaw::from_density(-1.0, 1.0, [](double x) { return 0.75 * (1.0 - x * x); }, "bump");

  run.guarded("env.h_positivity", "uniform and bump laws", [&] {
    const auto du = validate_law(uniform);
    const auto db = validate_law(bump);
    run.add("env.h_positivity", "uniform and bump laws", du.ok && db.ok,
            "min h uniform=" + sci(du.min_h) + " bump=" + sci(db.min_h));
  });

  run.guarded("env.closed_form_h", "uniform closed form vs quadrature", [&] {
    const auto numeric = EnvironmentLaw::from_density(-1.0, 1.0, [](double) { return 0.5; }, "uniform-quadrature");
    double worst = 0.0;
    for (double x : interior_grid(uniform, 4096)) worst = std::max(worst, std::abs(uniform.h(x) - numeric.h(x)));
    run.add("env.closed_form_h", "uniform closed form vs quadrature", worst <= 1e-8, "max diff=" + sci(worst));
  });

  const std::vector<std::pair<RealFn, RealFn>> battery = {
      {[](double x) { return x; }, [](double) { return 1.0; }},
      {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
      {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
      {[](double x) { return std::cos(3.0 * x); }, [](double x) { return -3.0 * std::sin(3.0 * x); }},
  };
  run.guarded("env.integration_by_parts", "battery {x, x^2, sin x, cos 3x}", [&] {
    double worst = 0.0;
    for (const auto& law : {uniform, bump}) {
      for (const auto& [g, gp] : battery) worst = std::max(worst, check_ibp(law, g, gp));
    }
    run.add("env.integration_by_parts", "battery {x, x^2, sin x, cos 3x}", worst <= 1e-6,
            "max residual=" + sci(worst));
  });
  run.guarded("env.poincare", "battery {x, x^2, sin x, cos 3x}", [&] {
    double worst = 1e300;
    for (const auto& law : {uniform, bump}) {
      for (const auto& [g, gp] : battery) worst = std::min(worst, check_poincare(law, g, gp));
    }
    run.add("env.poincare", "battery {x, x^2, sin x, cos 3x}", worst >= -1e-9, "min margin=" + sci(worst));
  });
  run.guarded("env.tensorization", "sum of 3 coordinates", [&] {
    const MultiFn g = [](std::span<const double> x) { return x[0] + x[1] + x[2]; };
    const MultiFn one = [](std::span<const double>) { return 1.0; };
    const std::vector<MultiFn> partials{one, one, one};
    const auto m = check_poincare_tensorized(uniform, 3, g, partials, 100000);
    const bool ok = std::abs(m.margin - 0.5) <= 4.0 * m.std_error && m.margin >= -4.0 * m.std_error;
    run.add("env.tensorization", "sum of 3 coordinates", ok, "margin=" + sci(m.margin) + " se=" + sci(m.std_error));
  });
  run.guarded("env.kappa", "threshold at 1/kappa", [&] {
    bool ok = true;
    std::string detail;
    for (int d : {1, 2}) {
      const double kap = kappa(uniform, d);
      const double lp = std::log(phi(uniform, 1.0 / kap));
      ok = ok && kap > 0.0 && lp <= kappa_threshold(d) + 1e-6 && phi(uniform, 1.0 / kap) < 0.01;
      detail += "d=" + std::to_string(d) + " kappa=" + sci(kap) + " ";
    }
    run.add("env.kappa", "threshold at 1/kappa", ok, detail);
  });
}

void lattice_checks(Runner& run) {
  run.guarded("lattice.reachability", "cone vs walk endpoints", [&] {
    bool ok = true;
    for (int d : {1, 2, 3}) {
      std::set<Site> ends{Site::origin(d)};
      for (int k = 1; k <= 5; ++k) {
        std::set<Site> next;
        for (const auto& x : ends) {
          for (auto& y : neighbors(x)) next.insert(std::move(y));
        }
        ends.swap(next);
        const auto sites = reachable_sites(d, k);
        ok = ok && std::set<Site>(sites.begin(), sites.end()) == ends && sites.size() == ends.size();
        const Cone cone(d, k);
        ok = ok && cone.layer_size(k) == sites.size();
      }
    }
    run.add("lattice.reachability", "cone vs walk endpoints", ok, "d in {1,2,3}, k <= 5");
  });
}

void engine_checks(Runner& run, const VerifyOptions& options) {
  run.guarded("engine.normalization", "figure-1 instance", [&] {
    const auto inst = uniform_instance(1, 300, 3.0, replication_seed(1, 0));
    auto sol = forward_backward(inst);
    if (options.perturb_theta) {
      auto values = std::vector<double>(sol.theta[150].values().begin(), sol.theta[150].values().end());
      values[values.size() / 2] += 1e-6;
      sol.theta[150] = LayerField(sol.cone, 151, std::move(values));
    }
    double worst = 0.0;
    bool in_range = true;
    for (const auto& layer : sol.theta) {
      worst = std::max(worst, std::abs(layer.sum() - 1.0));
      for (double t : layer.values()) in_range = in_range && t >= 0.0 && t <= 1.0;
    }
    run.add("engine.normalization", "figure-1 instance", worst <= 1e-10 && in_range,
            "max |sum theta - 1|=" + sci(worst));
  });

  run.guarded("engine.brute_force", "d=1 enumeration", [&] {
    double worst = 0.0;
    int idx = 0;
    for (int n : {4, 8, 10}) {
      for (double beta : {0.0, 1.0, 3.0}) {
        const auto inst = uniform_instance(1, n, beta, 1000 + static_cast<std::uint64_t>(idx++));
        const auto sol = forward_backward(inst);
        const auto bf = brute_force(inst);
        for (int k = 1; k <= n; ++k) {
          for (const auto& x : reachable_sites(1, k)) {
            worst = std::max(worst, std::abs(sol.theta_at(k, x) - bf.theta_at(k, x)));
          }
        }
        worst = std::max({worst, std::abs(sol.log_partition - bf.log_partition), std::abs(rho(sol) - bf.rho),
                          std::abs(ell(sol).ell - bf.ell)});
      }
    }
    run.add("engine.brute_force", "d=1 enumeration", worst <= 1e-10, "max diff=" + sci(worst));
  });

  run.guarded("engine.beta0_binomial", "d=1 n=300", [&] {
    const auto sol = forward_backward(uniform_instance(1, 300, 0.0, 7));
    double worst = 0.0;
    for (int k = 1; k <= 300; ++k) {
      for (const auto& x : reachable_sites(1, k)) {
        worst = std::max(worst, std::abs(sol.theta_at(k, x) - srw_marginal_1d(k, x[0])));
      }
    }
    run.add("engine.beta0_binomial", "d=1 n=300", worst <= 1e-12, "sup diff=" + sci(worst));
  });

  run.guarded("engine.zeta_sandwich", "d=1 n=40 beta in {1,3}", [&] {
    bool ok = true;
    double worst = 0.0;
    for (double beta : {1.0, 3.0}) {
      const auto inst = uniform_instance(1, 40, beta, 99);
      const auto sol = forward_backward(inst);
      const double width = inst.law.hi() - inst.law.lo();
      const double f = std::exp(beta * width);
      for (int k = 4; k <= 40; k += 4) {
        const auto zeta = zero_layer_solution(inst, k);
        const auto zl = zeta.layer(k).values();
        const auto tl = sol.layer(k).values();
        for (std::size_t i = 0; i < zl.size(); ++i) {
          const double lo = tl[i] / f * (1.0 - 1e-9);
          const double hi = tl[i] * f * (1.0 + 1e-9);
          ok = ok && zl[i] >= lo && zl[i] <= hi;
          if (tl[i] > 0.0) worst = std::max(worst, std::abs(std::log(zl[i] / tl[i])) / (beta * width));
        }
      }
    }
    run.add("engine.zeta_sandwich", "d=1 n=40 beta in {1,3}", ok,
            "max |log(zeta/theta)| / (beta (b-a))=" + sci(worst));
  });

  run.guarded("engine.derivative_identity", "d=1 n=40 beta=3", [&] {
    const auto inst = uniform_instance(1, 40, 3.0, 5);
    const auto sol = forward_backward(inst);
    SplitMix64 rng(derive_seed(inst.seed, 0, static_cast<std::uint64_t>(StreamTag::kMonteCarlo)));
    double worst = 0.0;
    bool ok = true;
    for (int t = 0; t < 25; ++t) {
      const int k = 1 + static_cast<int>(rng() % 40);
      const auto sites = reachable_sites(1, k);
      const Site& x = sites[rng() % sites.size()];
      const auto c = theta_derivative_check(inst, sol, k, x);
      const double err = std::abs(c.analytic - c.numeric);
      worst = std::max(worst, err);
      ok = ok && err <= 1e-5 * std::max(1.0, c.analytic);
    }
    run.add("engine.derivative_identity", "d=1 n=40 beta=3", ok, "max |fd - analytic|=" + sci(worst));
  });

  run.guarded("engine.determinism", "repeat solve", [&] {
    const auto inst = uniform_instance(2, 30, 2.0, 11);
    const auto a = forward_backward(inst);
    const auto b = forward_backward(inst);
    bool same = a.log_partition == b.log_partition;
    for (int k = 1; k <= 30 && same; ++k) {
      const auto x = a.layer(k).values();
      const auto y = b.layer(k).values();
      same = std::equal(x.begin(), x.end(), y.begin(), y.end());
    }
    run.add("engine.determinism", "repeat solve", same, same ? "bit-identical" : "solutions differ");
  });
}

void functional_checks(Runner& run) {
  run.guarded("functionals.overlap_chain", "ell^2 <= rho <= ell", [&] {
    bool chain = true, floors = true, identity = true, argmax = true;
    int count = 0;
    for (int d : {1, 2}) {
      for (int n : {10, 50}) {
        for (double beta : {0.0, 1.0, 3.0, 6.0}) {
          const auto inst = uniform_instance(d, n, beta, 500 + static_cast<std::uint64_t>(count++));
          const auto sol = forward_backward(inst);
          const auto alpha = alpha_profile(sol);
          const double r = rho(sol);
          const auto e = ell(sol);
          chain = chain && e.ell * e.ell <= r + 1e-12 && r <= e.ell + 1e-12;
          double mean = 0.0;
          for (std::size_t k = 0; k < alpha.size(); ++k) {
            mean += alpha[k];
            floors = floors && alpha[k] * std::pow(2.0 * (k + 1) + 1.0, d) >= 1.0 - 1e-12;
          }
          mean /= n;
          identity = identity && std::abs(mean - r) <= 1e-12;
          floors = floors && r >= 1.0 / (std::pow(3.0, d) * n);
          double score = 0.0;
          for (int k = 1; k <= n; ++k) score += sol.theta_at(k, e.path.at(k));
          argmax = argmax && e.path.is_valid() && std::abs(score - n * e.ell) <= 1e-12;
        }
      }
    }
    run.add("functionals.overlap_chain", "ell^2 <= rho <= ell", chain, std::to_string(count) + " instances");
    run.add("functionals.alpha_floor", "alpha_k (2k+1)^d >= 1 and rho >= 1/(3^d n)", floors, "");
    run.add("functionals.rho_identity", "rho = mean alpha", identity, "");
    run.add("functionals.ell_argmax", "argmax path attains n*ell", argmax, "");
  });

  run.guarded("functionals.gamma_bounds", "0 < gamma_k <= K", [&] {
    const auto inst = uniform_instance(1, 50, 3.0, 17);
    const auto sol = forward_backward(inst);
    const auto gt = gamma_tau_profiles(sol, inst);
    const double K = poincare_constant(inst.law);
    bool ok = true;
    for (std::size_t k = 0; k < gt.gamma.size(); ++k) {
      ok = ok && gt.gamma[k] > 0.0 && gt.gamma[k] <= K + 1e-12 && gt.tau[k] > -1.0 && gt.tau[k] < 1.0;
    }
    run.add("functionals.gamma_bounds", "0 < gamma_k <= K", ok, "K=" + sci(K));
  });

  run.guarded("sampler.replica_overlap", "d=1 n=30 beta=3", [&] {
    const auto inst = uniform_instance(1, 30, 3.0, 23);
    const auto sol = forward_backward(inst);
    SplitMix64 rng(derive_seed(inst.seed, 0, static_cast<std::uint64_t>(StreamTag::kPathSampling)));
    const int pairs = 5000;
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const auto p = sample_path(sol, rng);
      const auto q = sample_path(sol, rng);
      const double o = static_cast<double>(overlap(p, q)) / 30.0;
      mean += o;
      sq += o * o;
    }
    mean /= pairs;
    const double se = std::sqrt(std::max(0.0, sq / pairs - mean * mean) / pairs);
    const double r = rho(sol);
    run.add("sampler.replica_overlap", "d=1 n=30 beta=3", std::abs(mean - r) <= 4.0 * se,
            "mean=" + sci(mean) + " rho=" + sci(r) + " se=" + sci(se));
  });
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  Runner run(report);
  env_checks(run);
  lattice_checks(run);
  engine_checks(run, options);
  functional_checks(run);
  return report;
}

}  // namespace polylab
