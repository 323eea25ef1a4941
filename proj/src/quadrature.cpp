#include "polylab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "polylab/error.hpp"

namespace polylab {

void QuadratureSpec::validate() const {
  if (node_count < 64) throw ConfigError("quadrature node_count must be >= 64");
  if (!(abs_tolerance > 0.0)) throw ConfigError("quadrature abs_tolerance must be > 0");
}

namespace {

GaussLegendreRule build_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

double panel(const std::function<double(double)>& f, double lo, double hi,
             const GaussLegendreRule& rule) {
  const double c = 0.5 * (lo + hi);
  const double r = 0.5 * (hi - lo);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    s += rule.weights[i] * f(c + r * rule.nodes[i]);
  }
  return s * r;
}

double adapt(const std::function<double(double)>& f, double lo, double hi,
             double whole, double tol, int depth, const GaussLegendreRule& rule) {
  const double mid = 0.5 * (lo + hi);
  const double left = panel(f, lo, mid, rule);
  const double right = panel(f, mid, hi, rule);
  const double both = left + right;
  if (std::abs(both - whole) <= tol || depth >= 40 || mid <= lo || mid >= hi) {
    return both;
  }
  return adapt(f, lo, mid, left, 0.5 * tol, depth + 1, rule) +
         adapt(f, mid, hi, right, 0.5 * tol, depth + 1, rule);
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int node_count) {
  static std::mutex mu;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(node_count);
  if (it == cache.end()) it = cache.emplace(node_count, build_rule(node_count)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureSpec& spec) {
  spec.validate();
  if (hi == lo) return 0.0;
  if (hi < lo) return -integrate(f, hi, lo, spec);
  const auto& rule = gauss_legendre(spec.node_count);
  const double whole = panel(f, lo, hi, rule);
  const double value = adapt(f, lo, hi, whole, spec.abs_tolerance, 0, rule);
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  return value;
}

}  // namespace polylab
