#include "polylab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "polylab/error.hpp"

namespace polylab {

std::vector<double> alpha_profile(const ThetaSolution& solution) {
  std::vector<double> out;
  out.reserve(solution.theta.size());
  for (const auto& layer : solution.theta) {
    double s = 0.0;
    for (double t : layer.values()) s += t * t;
    out.push_back(s);
  }
  return out;
}

double rho(const ThetaSolution& solution) {
  const auto alpha = alpha_profile(solution);
  double s = 0.0;
  for (double a : alpha) s += a;
  return s / static_cast<double>(alpha.size());
}

EllResult ell(const ThetaSolution& solution) {
  const Cone& cone = *solution.cone;
  const int n = cone.length();
  // choice[k-1][i]: layer-(k-1) index of the best predecessor of site i at step k.
  std::vector<std::vector<std::uint32_t>> choice(static_cast<std::size_t>(n));
  std::vector<double> best(solution.layer(1).values().begin(), solution.layer(1).values().end());
  choice[0].assign(best.size(), 0);
  std::vector<double> next;
  for (int k = 2; k <= n; ++k) {
    const auto theta = solution.layer(k).values();
    next.assign(theta.size(), 0.0);
    auto& pick = choice[static_cast<std::size_t>(k - 1)];
    pick.assign(theta.size(), 0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double m = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      // Predecessors arrive in lexicographic order, so strict > keeps the smallest site.
      cone.for_each_predecessor(k, i, [&](std::size_t j) {
        if (best[j] > m) {
          m = best[j];
          arg = j;
        }
      });
      next[i] = theta[i] + m;
      pick[i] = static_cast<std::uint32_t>(arg);
    }
    best.swap(next);
  }
  std::size_t end = 0;
  for (std::size_t i = 1; i < best.size(); ++i) {
    if (best[i] > best[end] || (best[i] == best[end] && cone.site(n, i) < cone.site(n, end))) end = i;
  }
  std::vector<Site> sites(static_cast<std::size_t>(n));
  std::size_t i = end;
  for (int k = n; k >= 1; --k) {
    sites[static_cast<std::size_t>(k - 1)] = cone.site(k, i);
    i = choice[static_cast<std::size_t>(k - 1)][i];
  }
  EllResult out;
  out.score = best[end];
  out.ell = out.score / n;
  out.path = PolymerPath(cone.dim(), std::move(sites));
  return out;
}

namespace {

double h_of_engine_value(const PolymerInstance& instance, double omega) {
  return instance.law.h(instance.raw_value(omega));
}

}  // namespace

GammaTauProfiles gamma_tau_profiles(const ThetaSolution& solution, const PolymerInstance& instance) {
  const Cone& cone = *solution.cone;
  const Environment env(instance);
  GammaTauProfiles out;
  out.gamma.resize(static_cast<std::size_t>(cone.length()));
  out.tau.resize(static_cast<std::size_t>(cone.length()));
  std::vector<double> omega;
  for (int k = 1; k <= cone.length(); ++k) {
    const auto theta = solution.layer(k).values();
    omega.resize(theta.size());
    env.layer_values(cone, k, omega);
    double g = 0.0, t = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      g += h_of_engine_value(instance, omega[i]) * theta[i];
      t += omega[i] * theta[i];
    }
    out.gamma[static_cast<std::size_t>(k - 1)] = g;
    out.tau[static_cast<std::size_t>(k - 1)] = t;
  }
  return out;
}

double psi(const PolymerInstance& instance, const PolymerPath& path, std::span<const int> index_set) {
  if (path.length() != instance.n || path.dim() != instance.d) throw ConfigError("psi: path does not match instance");
  std::vector<bool> seen(static_cast<std::size_t>(instance.n) + 1, false);
  const Environment env(instance);
  double s = 0.0;
  for (int k : index_set) {
    if (k < 1 || k > instance.n) throw ConfigError("psi: index " + std::to_string(k) + " outside 1..n");
    if (seen[static_cast<std::size_t>(k)]) throw ConfigError("psi: index " + std::to_string(k) + " repeated");
    seen[static_cast<std::size_t>(k)] = true;
    s += h_of_engine_value(instance, env.value(k, path.at(k).coords()));
  }
  return s;
}

std::uint64_t layer_resample_seed(std::uint64_t seed, int k, int r) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(StreamTag::kLayerResample)),
                     static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(StreamTag::kLayerResample));
}

namespace {

struct LayerStats {
  double alpha = 0.0;
  double gamma = 0.0;
};

LayerStats layer_stats(const PolymerInstance& instance, const Cone& cone, const LayerConditional& cond,
                       const Environment& env, std::vector<double>& omega, std::vector<double>& theta) {
  const int k = cond.k;
  omega.resize(cond.inflow.size());
  env.layer_values(cone, k, omega);
  double shift = -std::numeric_limits<double>::infinity();
  for (double w : omega) shift = std::max(shift, instance.beta * w);
  theta.resize(omega.size());
  double z = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    theta[i] = cond.inflow[i] * std::exp(instance.beta * omega[i] - shift) * cond.outflow[i];
    z += theta[i];
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("primed_estimates: step " + std::to_string(k) + " not normalizable");
  LayerStats s;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double t = theta[i] / z;
    s.alpha += t * t;
    s.gamma += h_of_engine_value(instance, omega[i]) * t;
  }
  return s;
}

}  // namespace

PrimedEstimates primed_estimates(const PolymerInstance& instance, int k, int resamples) {
  instance.validate();
  if (resamples < 100) throw ConfigError("primed_estimates needs at least 100 resamples");
  if (k < 1 || k > instance.n) throw ConfigError("primed_estimates: step out of range");
  const Cone cone(instance.d, instance.n);
  const LayerConditional cond = layer_conditional(instance, cone, k);
  std::vector<double> omega, theta;

  PrimedEstimates out;
  out.resamples = resamples;
  {
    const LayerStats base = layer_stats(instance, cone, cond, Environment(instance), omega, theta);
    out.alpha_k = base.alpha;
    out.gamma_k = base.gamma;
  }
  // Welford accumulation keeps the mean bit-exact when every draw agrees.
  double ma = 0.0, mg = 0.0, sa = 0.0, sg = 0.0;
  EnvironmentOverrides ov;
  for (int r = 0; r < resamples; ++r) {
    ov.layer_seed[k] = layer_resample_seed(instance.seed, k, r);
    const LayerStats s = layer_stats(instance, cone, cond, Environment(instance, &ov), omega, theta);
    const double da = s.alpha - ma;
    const double dg = s.gamma - mg;
    ma += da / (r + 1);
    mg += dg / (r + 1);
    sa += da * (s.alpha - ma);
    sg += dg * (s.gamma - mg);
  }
  out.alpha_prime = ma;
  out.gamma_prime = mg;
  const double m = resamples;
  out.alpha_se = std::sqrt(sa / (m - 1.0) / m);
  out.gamma_se = std::sqrt(sg / (m - 1.0) / m);
  return out;
}

LocalizationReport localization_report(const ThetaSolution& solution, const PolymerInstance& instance,
                                       bool with_gamma_tau) {
  LocalizationReport rep;
  rep.alpha_profile = alpha_profile(solution);
  double s = 0.0;
  for (double a : rep.alpha_profile) s += a;
  rep.rho = s / static_cast<double>(rep.alpha_profile.size());
  auto e = ell(solution);
  rep.ell = e.ell;
  rep.argmax_path = std::move(e.path);
  if (with_gamma_tau) {
    auto gt = gamma_tau_profiles(solution, instance);
    rep.gamma_profile = std::move(gt.gamma);
    rep.tau_profile = std::move(gt.tau);
  }
  return rep;
}

}  // namespace polylab
