#include "polylab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "polylab/error.hpp"
#include "polylab/format.hpp"

namespace polylab {

void PolymerInstance::validate() const {
  if (d < 1) throw ConfigError("instance: d must be >= 1");
  if (n < 1) throw ConfigError("instance: n must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("instance: beta must be finite and >= 0");
}

Environment::Environment(const PolymerInstance& instance, const EnvironmentOverrides* overrides)
    : instance_(instance), overrides_(overrides != nullptr && !overrides->empty() ? overrides : nullptr) {}

double Environment::value(int k, std::span<const Coord> coords) const {
  std::uint64_t seed = instance_.seed;
  if (overrides_ != nullptr) {
    if (!overrides_->point_values.empty()) {
      auto it = overrides_->point_values.find(PackedSite(k, coords));
      if (it != overrides_->point_values.end()) return it->second;
    }
    if (auto it = overrides_->layer_constant.find(k); it != overrides_->layer_constant.end()) return it->second;
    if (auto it = overrides_->layer_seed.find(k); it != overrides_->layer_seed.end()) seed = it->second;
  }
  const double omega = instance_.law.quantile(counter_uniform(seed, k, coords));
  return instance_.centered ? omega - instance_.law.mean() : omega;
}

void Environment::layer_values(const Cone& cone, int k, std::span<double> out) const {
  std::vector<Coord> buf(static_cast<std::size_t>(cone.dim()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    cone.coords(k, i, buf);
    out[i] = value(k, buf);
  }
}

double env_value(const PolymerInstance& instance, int k, const Site& x) {
  instance.validate();
  if (k < 1 || k > instance.n) throw ConfigError("env_value: step " + std::to_string(k) + " out of range");
  if (x.dim() != instance.d) throw ConfigError("env_value: site dimension mismatch");
  if (!is_reachable(x, k)) {
    throw ConfigError("env_value: site " + x.to_string() + " is not reachable at step " + std::to_string(k));
  }
  return Environment(instance).value(k, x.coords());
}

namespace {

// exp(beta * omega - shift) for one layer; returns the shift.
double layer_weights(const Environment& env, const Cone& cone, double beta, int k, std::vector<double>& w) {
  w.resize(cone.layer_size(k));
  env.layer_values(cone, k, w);
  double shift = -std::numeric_limits<double>::infinity();
  for (double& v : w) {
    v *= beta;
    shift = std::max(shift, v);
  }
  for (double& v : w) v = std::exp(v - shift);
  return shift;
}

double normalize_or_throw(std::vector<double>& v, const char* what, int k) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(s > 0.0) || !std::isfinite(s)) {
    std::ostringstream os;
    os << what << " layer at step " << k << " is not normalizable (sum=" << s << ")";
    throw NumericalError(os.str());
  }
  const double inv = 1.0 / s;
  for (double& x : v) {
    x *= inv;
    if (std::isnan(x)) throw NumericalError(std::string(what) + " layer at step " + std::to_string(k) + " has NaN");
  }
  return s;
}

// Normalized forward layer k from normalized layer k-1; returns log of the
// scale removed.
double forward_step(const Environment& env, const Cone& cone, double beta, int k, const std::vector<double>& prev,
                    std::vector<double>& out, std::vector<double>& scratch) {
  const double shift = layer_weights(env, cone, beta, k, scratch);
  out.assign(cone.layer_size(k), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    cone.for_each_predecessor(k, i, [&](std::size_t j) { s += prev[j]; });
    out[i] = s * scratch[i];
  }
  return std::log(normalize_or_throw(out, "forward", k)) + shift;
}

// Normalized backward layer k from normalized layer k+1.
void backward_step(const Environment& env, const Cone& cone, double beta, int k, const std::vector<double>& next,
                   std::vector<double>& out, std::vector<double>& scratch) {
  layer_weights(env, cone, beta, k + 1, scratch);
  out.assign(cone.layer_size(k), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    cone.for_each_successor(k, i, [&](std::size_t j) { s += scratch[j] * next[j]; });
    out[i] = s;
  }
  normalize_or_throw(out, "backward", k);
}

std::vector<double> product_normalized(const std::vector<double>& a, const std::vector<double>& b, int k) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
  normalize_or_throw(t, "theta", k);
  return t;
}

}  // namespace

ThetaSolution forward_backward(const PolymerInstance& instance, const EnvironmentOverrides& overrides) {
  instance.validate();
  return forward_backward(instance, std::make_shared<const Cone>(instance.d, instance.n), overrides);
}

ThetaSolution forward_backward(const PolymerInstance& instance, std::shared_ptr<const Cone> cone,
                               const EnvironmentOverrides& overrides) {
  instance.validate();
  if (cone->dim() != instance.d || cone->length() != instance.n) throw ConfigError("cone does not match instance");
  const int n = instance.n;
  const Environment env(instance, &overrides);

  ThetaSolution sol;
  sol.cone = cone;
  sol.forward.resize(static_cast<std::size_t>(n) + 1);
  sol.forward[0] = {1.0};
  sol.layer_lognorms.resize(static_cast<std::size_t>(n));
  std::vector<double> scratch;
  for (int k = 1; k <= n; ++k) {
    sol.layer_lognorms[static_cast<std::size_t>(k - 1)] =
        forward_step(env, *cone, instance.beta, k, sol.forward[static_cast<std::size_t>(k - 1)],
                     sol.forward[static_cast<std::size_t>(k)], scratch);
  }
  sol.log_partition = std::accumulate(sol.layer_lognorms.begin(), sol.layer_lognorms.end(), 0.0);
  if (!std::isfinite(sol.log_partition)) throw NumericalError("log partition function is not finite");

  std::vector<std::vector<double>> theta(static_cast<std::size_t>(n));
  std::vector<double> back(cone->layer_size(n), 1.0);
  normalize_or_throw(back, "backward", n);
  theta[static_cast<std::size_t>(n - 1)] = product_normalized(sol.forward[static_cast<std::size_t>(n)], back, n);
  std::vector<double> next;
  for (int k = n - 1; k >= 1; --k) {
    next.swap(back);
    backward_step(env, *cone, instance.beta, k, next, back, scratch);
    theta[static_cast<std::size_t>(k - 1)] = product_normalized(sol.forward[static_cast<std::size_t>(k)], back, k);
  }
  sol.theta.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) sol.theta.emplace_back(cone, k, std::move(theta[static_cast<std::size_t>(k - 1)]));
  return sol;
}

LayerConditional layer_conditional(const PolymerInstance& instance, const Cone& cone, int k) {
  instance.validate();
  if (k < 1 || k > instance.n) throw ConfigError("layer_conditional: step out of range");
  const Environment env(instance);
  std::vector<double> scratch;
  std::vector<double> fwd{1.0};
  std::vector<double> tmp;
  for (int j = 1; j < k; ++j) {
    forward_step(env, cone, instance.beta, j, fwd, tmp, scratch);
    fwd.swap(tmp);
  }
  LayerConditional out;
  out.k = k;
  out.inflow.assign(cone.layer_size(k), 0.0);
  for (std::size_t i = 0; i < out.inflow.size(); ++i) {
    double s = 0.0;
    cone.for_each_predecessor(k, i, [&](std::size_t j) { s += fwd[j]; });
    out.inflow[i] = s;
  }
  std::vector<double> back(cone.layer_size(instance.n), 1.0);
  normalize_or_throw(back, "backward", instance.n);
  for (int j = instance.n - 1; j >= k; --j) {
    tmp.swap(back);
    backward_step(env, cone, instance.beta, j, tmp, back, scratch);
  }
  out.outflow = std::move(back);
  return out;
}

// ---------------------------------------------------------------------------

double BruteForceResult::theta_at(int k, const Site& x) const {
  const auto& layer = theta.at(static_cast<std::size_t>(k - 1));
  auto it = layer.find(x);
  return it == layer.end() ? 0.0 : it->second;
}

namespace {

// Depth-first walk over all paths; visit(path, log_weight) at each leaf.
template <class Visit>
void enumerate_paths(const PolymerInstance& instance, const Environment& env, Visit&& visit) {
  const int n = instance.n;
  std::vector<Site> path(static_cast<std::size_t>(n));
  std::vector<double> partial(static_cast<std::size_t>(n) + 1, 0.0);
  auto rec = [&](auto&& self, int k, const Site& from) -> void {
    for (Site& y : neighbors(from)) {
      const double lw = partial[static_cast<std::size_t>(k - 1)] + instance.beta * env.value(k, y.coords());
      partial[static_cast<std::size_t>(k)] = lw;
      path[static_cast<std::size_t>(k - 1)] = std::move(y);
      if (k == n) {
        visit(path, lw);
      } else {
        self(self, k + 1, path[static_cast<std::size_t>(k - 1)]);
      }
    }
  };
  rec(rec, 1, Site::origin(instance.d));
}

}  // namespace

BruteForceResult brute_force(const PolymerInstance& instance) {
  instance.validate();
  const double count = std::pow(2.0 * instance.d, instance.n);
  if (count > kBruteForceMaxPaths) {
    std::ostringstream os;
    os << "brute_force: (2d)^n = " << count << " paths exceeds the cap of " << kBruteForceMaxPaths;
    throw ConfigError(os.str());
  }
  const Environment env(instance);
  const int n = instance.n;

  double max_lw = -std::numeric_limits<double>::infinity();
  enumerate_paths(instance, env, [&](const std::vector<Site>&, double lw) { max_lw = std::max(max_lw, lw); });

  BruteForceResult out;
  out.theta.resize(static_cast<std::size_t>(n));
  double z = 0.0;
  enumerate_paths(instance, env, [&](const std::vector<Site>& path, double lw) {
    const double w = std::exp(lw - max_lw);
    z += w;
    for (int k = 1; k <= n; ++k) out.theta[static_cast<std::size_t>(k - 1)][path[static_cast<std::size_t>(k - 1)]] += w;
    ++out.path_count;
  });
  for (auto& layer : out.theta) {
    for (auto& [site, v] : layer) v /= z;
  }
  out.log_partition = max_lw + std::log(z);

  double rho_sum = 0.0;
  for (const auto& layer : out.theta) {
    for (const auto& [site, v] : layer) rho_sum += v * v;
  }
  out.rho = rho_sum / n;

  double best = -1.0;
  enumerate_paths(instance, env, [&](const std::vector<Site>& path, double) {
    double score = 0.0;
    for (int k = 1; k <= n; ++k) score += out.theta_at(k, path[static_cast<std::size_t>(k - 1)]);
    if (score > best) {
      best = score;
      out.argmax_path = PolymerPath(instance.d, path);
    }
  });
  out.ell = best / n;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class Weights>
std::size_t draw_index(std::size_t count, Weights&& weight, SplitMix64& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += weight(i);
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double w = weight(i);
    if (w > 0.0) last_positive = i;
    acc += w;
    if (target < acc) return i;
  }
  return last_positive;
}

}  // namespace

PolymerPath sample_path(const ThetaSolution& solution, SplitMix64& rng) {
  const Cone& cone = *solution.cone;
  const int n = cone.length();
  std::vector<Site> sites(static_cast<std::size_t>(n));
  const auto& last = solution.forward[static_cast<std::size_t>(n)];
  std::size_t i = draw_index(last.size(), [&](std::size_t j) { return last[j]; }, rng);
  sites[static_cast<std::size_t>(n - 1)] = cone.site(n, i);
  std::vector<std::size_t> cand;
  for (int k = n - 1; k >= 1; --k) {
    cand.clear();
    cone.for_each_predecessor(k + 1, i, [&](std::size_t j) { cand.push_back(j); });
    const auto& layer = solution.forward[static_cast<std::size_t>(k)];
    const std::size_t c = draw_index(cand.size(), [&](std::size_t t) { return layer[cand[t]]; }, rng);
    i = cand[c];
    sites[static_cast<std::size_t>(k - 1)] = cone.site(k, i);
  }
  return PolymerPath(cone.dim(), std::move(sites));
}

ThetaSolution zero_layer_solution(const PolymerInstance& instance, int k) {
  instance.validate();
  if (k < 1 || k > instance.n) throw ConfigError("zero_layer_solution: step " + std::to_string(k) + " out of range");
  EnvironmentOverrides overrides;
  overrides.layer_constant[k] = 0.0;
  return forward_backward(instance, overrides);
}

DerivativeCheck theta_derivative_check(const PolymerInstance& instance, const ThetaSolution& solution, int k,
                                       const Site& x, double fd_step) {
  if (!(fd_step >= 1e-8 && fd_step <= 1e-4)) throw ConfigError("fd_step must lie in [1e-8, 1e-4]");
  if (k < 1 || k > instance.n || !is_reachable(x, k) || x.dim() != instance.d) {
    throw ConfigError("theta_derivative_check: (k, x) is not reachable");
  }
  const double theta = solution.theta_at(k, x);
  DerivativeCheck out;
  out.analytic = instance.beta * theta * (1.0 - theta);

  const double omega = env_value(instance, k, x);
  const double guard = instance.law.guard();
  const double lo = instance.value_lo() + guard;
  const double hi = instance.value_hi() - guard;
  double up = omega + fd_step;
  double down = omega - fd_step;
  if (up > hi || down < lo) {
    out.clamped = true;
    up = std::min(up, hi);
    down = std::max(down, lo);
  }
  auto theta_with = [&](double value) {
    EnvironmentOverrides ov;
    ov.point_values[PackedSite(k, x.coords())] = value;
    return forward_backward(instance, solution.cone, ov).theta_at(k, x);
  };
  out.numeric = (theta_with(up) - theta_with(down)) / (up - down);
  return out;
}

void write_theta_csv(const ThetaSolution& solution, std::ostream& out) {
  out << "k,site,theta\n";
  const Cone& cone = *solution.cone;
  for (int k = 1; k <= solution.length(); ++k) {
    const auto values = solution.layer(k).values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << k << ',' << cone.site(k, i).to_string() << ',' << format_real(values[i]) << '\n';
    }
  }
}

void write_theta_sidecar(const ThetaSolution& solution, const PolymerInstance& instance, std::ostream& out) {
  nlohmann::ordered_json j;
  j["log_partition"] = solution.log_partition;
  j["seed"] = instance.seed;
  j["d"] = instance.d;
  j["n"] = instance.n;
  j["beta"] = instance.beta;
  out << j.dump(2) << '\n';
}

}  // namespace polylab
