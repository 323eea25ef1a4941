#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "polylab/engine.hpp"
#include "polylab/error.hpp"
#include "polylab/functionals.hpp"

using namespace polylab;
using doctest::Approx;

namespace {

PolymerInstance make(int d, int n, double beta, std::uint64_t seed) {
  PolymerInstance inst;
  inst.d = d;
  inst.n = n;
  inst.beta = beta;
  inst.seed = seed;
  return inst;
}

}  // namespace

TEST_CASE("beta = 0, n = 2: rho = 7/16 and ell = 1/2 on the smallest path") {
  const auto sol = forward_backward(make(1, 2, 0.0, 0));
  const auto e = ell(sol);
  CHECK(rho(sol) == Approx(7.0 / 16.0).epsilon(1e-15));
  CHECK(e.ell == Approx(0.5).epsilon(1e-15));
  CHECK(e.score == Approx(1.0).epsilon(1e-15));
  CHECK(e.path == PolymerPath(1, {Site{-1}, Site{0}}));
}

TEST_CASE("ell ties resolve to the lexicographically smallest path in d = 2") {
  const auto sol = forward_backward(make(2, 1, 0.0, 0));
  CHECK(ell(sol).path == PolymerPath(2, {Site{-1, 0}}));
  CHECK(ell(sol).ell == Approx(0.25));
}

TEST_CASE("ell equals exhaustive maximization") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 10; ++t) {
    const int d = 1 + t % 2;
    const auto inst = oracle::random_instance(gen, d, d == 1 ? 10 : 5, 6.0);
    const auto sol = forward_backward(inst);
    const auto e = oracle::enumerate_paths(inst);
    const auto got = ell(sol);
    CHECK(std::abs(got.ell - static_cast<double>(e.ell)) <= 1e-12);
    double s = 0.0;
    for (int k = 1; k <= inst.n; ++k) s += sol.theta_at(k, got.path.at(k));
    CHECK(s == Approx(got.score).epsilon(1e-14));
  }
}

TEST_CASE("gamma and tau profiles") {
  const auto inst = make(1, 30, 2.0, 14);
  const auto sol = forward_backward(inst);
  const auto gt = gamma_tau_profiles(sol, inst);
  REQUIRE(gt.gamma.size() == 30);
  for (int k = 1; k <= 30; ++k) {
    double g = 0.0, t = 0.0;
    for (const auto& x : reachable_sites(1, k)) {
      const double w = env_value(inst, k, x);
      g += 0.5 * (1.0 - w * w) * sol.theta_at(k, x);
      t += w * sol.theta_at(k, x);
    }
    CHECK(gt.gamma[static_cast<std::size_t>(k - 1)] == Approx(g).epsilon(1e-13));
    CHECK(gt.tau[static_cast<std::size_t>(k - 1)] == Approx(t).epsilon(1e-13));
    CHECK(gt.gamma[static_cast<std::size_t>(k - 1)] <= 0.5);
  }
}

TEST_CASE("gamma uses the law coordinate for centered instances") {
  PolymerInstance inst = make(1, 10, 1.0, 3);
  inst.law = EnvironmentLaw::uniform(0.0, 2.0);
  PolymerInstance centered = inst;
  centered.centered = true;
  // Centering shifts every weight by the same factor, so theta and gamma are unchanged.
  const auto a = gamma_tau_profiles(forward_backward(inst), inst);
  const auto b = gamma_tau_profiles(forward_backward(centered), centered);
  for (std::size_t k = 0; k < a.gamma.size(); ++k) {
    CHECK(a.gamma[k] == Approx(b.gamma[k]).epsilon(1e-12));
    CHECK(a.tau[k] - 1.0 == Approx(b.tau[k]).epsilon(1e-12));
  }
}

TEST_CASE("psi sums h along a path") {
  const auto inst = make(1, 4, 1.0, 6);
  const PolymerPath p(1, {Site{1}, Site{2}, Site{1}, Site{0}});
  const int all[] = {1, 2, 3, 4};
  const int some[] = {4, 2};
  double expect = 0.0;
  for (int k : some) {
    const double w = env_value(inst, k, p.at(k));
    expect += 0.5 * (1.0 - w * w);
  }
  CHECK(psi(inst, p, some) == Approx(expect).epsilon(1e-14));
  CHECK(psi(inst, p, all) >= psi(inst, p, some));
  CHECK(psi(inst, p, std::span<const int>()) == 0.0);
  const int bad[] = {0};
  const int repeated[] = {2, 2};
  CHECK_THROWS_AS(psi(inst, p, bad), ConfigError);
  CHECK_THROWS_AS(psi(inst, p, repeated), ConfigError);
}

TEST_CASE("primed estimates at beta = 0 are exact") {
  const auto inst = make(1, 20, 0.0, 2);
  const auto est = primed_estimates(inst, 10, 150);
  CHECK(est.alpha_prime == est.alpha_k);
  CHECK(est.gamma_k > 0.0);
  CHECK(est.alpha_se == 0.0);
  CHECK_THROWS_AS(primed_estimates(inst, 10, 50), ConfigError);
  CHECK_THROWS_AS(primed_estimates(inst, 21, 100), ConfigError);
}

TEST_CASE("single-layer recomputation matches a full solve with the layer reseeded") {
  const auto inst = make(1, 25, 3.0, 31);
  const int k = 9;
  const auto est = primed_estimates(inst, k, 100);
  const auto base = forward_backward(inst);
  CHECK(est.alpha_k == Approx(alpha_profile(base)[k - 1]).epsilon(1e-12));

  // The first resample equals a full solve with the reseeded layer.
  EnvironmentOverrides ov;
  ov.layer_seed[k] = layer_resample_seed(inst.seed, k, 0);
  const auto full = forward_backward(inst, ov);
  const Cone cone(1, 25);
  const auto cond = layer_conditional(inst, cone, k);
  std::vector<double> omega(cond.inflow.size());
  Environment(inst, &ov).layer_values(cone, k, omega);
  double z = 0.0, a = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) z += cond.inflow[i] * std::exp(3.0 * omega[i]) * cond.outflow[i];
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double t = cond.inflow[i] * std::exp(3.0 * omega[i]) * cond.outflow[i] / z;
    a += t * t;
  }
  CHECK(a == Approx(alpha_profile(full)[k - 1]).epsilon(1e-12));
}

TEST_CASE("primed alpha stays below the e^{4 beta (b - a)} bound") {
  const auto inst = make(1, 40, 1.0, 44);
  const auto base = forward_backward(inst);
  const auto alpha = alpha_profile(base);
  for (int k : {5, 20, 40}) {
    const auto est = primed_estimates(inst, k, 200);
    CHECK(est.alpha_prime <= std::exp(8.0) * alpha[static_cast<std::size_t>(k - 1)] + 4.0 * est.alpha_se);
    CHECK(est.gamma_prime > 0.0);
  }
}

TEST_CASE("localization report bundles the functionals") {
  const auto inst = make(2, 12, 2.0, 8);
  const auto sol = forward_backward(inst);
  const auto rep = localization_report(sol, inst);
  CHECK(rep.rho == Approx(rho(sol)).epsilon(1e-15));
  CHECK(rep.ell == ell(sol).ell);
  CHECK(rep.argmax_path == ell(sol).path);
  CHECK(rep.gamma_profile.size() == 12);
  CHECK(localization_report(sol, inst, false).gamma_profile.empty());
}

TEST_CASE("property: ell^2 <= rho <= ell and the alpha floors") {
  std::mt19937_64 gen(2718);
  for (int t = 0; t < 120; ++t) {
    const int d = 1 + static_cast<int>(gen() % 3);
    const auto inst = oracle::random_instance(gen, d, d == 3 ? 10 : 60, 10.0);
    const auto sol = forward_backward(inst);
    const auto alpha = alpha_profile(sol);
    const double r = rho(sol);
    const double l = ell(sol).ell;
    CHECK(l * l <= r + 1e-12);
    CHECK(r <= l + 1e-12);
    CHECK(l <= 1.0 + 1e-12);
    CHECK(r >= 1.0 / (std::pow(3.0, d) * inst.n));
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      CHECK(alpha[k] * std::pow(2.0 * static_cast<double>(k + 1) + 1.0, d) >= 1.0 - 1e-12);
      CHECK(alpha[k] <= 1.0 + 1e-12);
    }
  }
}
