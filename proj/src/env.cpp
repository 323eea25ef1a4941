#include "polylab/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "polylab/error.hpp"

namespace polylab {

namespace {

// Piecewise-linear density with precomputed cumulative moments. Tail moments
// are accumulated from each side so that h stays accurate near both ends.
struct TableDensity {
  std::vector<double> xs;
  std::vector<double> fs;
  std::vector<double> cdf_left;   // integral of f over (xs[0], xs[i])
  double mean = 0.0;
  std::vector<double> q_left;     // integral of (m - y) f over (xs[0], xs[i])
  std::vector<double> q_right;    // integral of (y - m) f over (xs[i], xs.back())

  std::size_t segment(double x) const {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(i, xs.size() - 2);
  }

  double slope(std::size_t i) const { return (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]); }

  double density(double x) const {
    if (x <= xs.front() || x >= xs.back()) return 0.0;
    const std::size_t i = segment(x);
    return fs[i] + slope(i) * (x - xs[i]);
  }

  double cdf(double x) const {
    if (x <= xs.front()) return 0.0;
    if (x >= xs.back()) return 1.0;
    const std::size_t i = segment(x);
    const double t = x - xs[i];
    return cdf_left[i] + fs[i] * t + 0.5 * slope(i) * t * t;
  }

  // Integral of (c - u)(f0 + s u) du over (0, t).
  static double linear_moment(double c, double f0, double s, double t) {
    return c * f0 * t + (c * s - f0) * t * t / 2.0 - s * t * t * t / 3.0;
  }

  // q(x) = integral of (y - m) f(y) over (x, b), evaluated from the nearer end.
  double q(double x) const {
    const std::size_t i = segment(x);
    if (x <= mean) {
      // (m - y) with y = xs[i] + t: c = m - xs[i], integrand (c - t)(fs[i] + s t).
      const double t = x - xs[i];
      return q_left[i] + linear_moment(mean - xs[i], fs[i], slope(i), t);
    }
    // (y - m) with y = xs[i+1] - u: c = xs[i+1] - m, integrand (c - u)(fs[i+1] - s u).
    const double u = xs[i + 1] - x;
    return q_right[i + 1] + linear_moment(xs[i + 1] - mean, fs[i + 1], -slope(i), u);
  }
};

std::shared_ptr<const TableDensity> build_table(std::vector<double> xs, std::vector<double> fs) {
  if (xs.size() != fs.size()) throw ConfigError("table law: x and f columns differ in length");
  if (xs.size() < 2) throw ConfigError("table law: need at least two samples");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(fs[i])) {
      throw ConfigError("table law: non-finite sample at row " + std::to_string(i));
    }
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw ConfigError("table law: x must be strictly increasing (row " + std::to_string(i) + ")");
    }
    if (fs[i] < 0.0) throw ConfigError("table law: negative density at row " + std::to_string(i));
    if (i > 0 && i + 1 < xs.size() && !(fs[i] > 0.0)) {
      throw ConfigError("table law: density vanishes at interior point x=" +
                        std::to_string(xs[i]) + "; f must be nonzero inside the support");
    }
  }
  if (xs.size() == 2 && !(fs[0] > 0.0 || fs[1] > 0.0)) {
    throw ConfigError("table law: density is identically zero");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) mass += 0.5 * (fs[i] + fs[i + 1]) * (xs[i + 1] - xs[i]);
  for (double& f : fs) f /= mass;

  auto t = std::make_shared<TableDensity>();
  t->xs = std::move(xs);
  t->fs = std::move(fs);
  const std::size_t n = t->xs.size();
  t->cdf_left.assign(n, 0.0);
  double first_moment = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = t->xs[i + 1] - t->xs[i];
    t->cdf_left[i + 1] = t->cdf_left[i] + 0.5 * (t->fs[i] + t->fs[i + 1]) * w;
    // integral of (xs[i] + t)(fs[i] + s t) over (0, w)
    const double s = t->slope(i);
    first_moment += t->xs[i] * t->fs[i] * w + (t->xs[i] * s + t->fs[i]) * w * w / 2.0 + s * w * w * w / 3.0;
  }
  t->mean = first_moment;
  t->q_left.assign(n, 0.0);
  t->q_right.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = t->xs[i + 1] - t->xs[i];
    t->q_left[i + 1] = t->q_left[i] + TableDensity::linear_moment(t->mean - t->xs[i], t->fs[i], t->slope(i), w);
  }
  for (std::size_t i = n - 1; i > 0; --i) {
    const double w = t->xs[i] - t->xs[i - 1];
    t->q_right[i - 1] =
        t->q_right[i] + TableDensity::linear_moment(t->xs[i] - t->mean, t->fs[i], -t->slope(i - 1), w);
  }
  return t;
}

double bisect_quantile(const EnvironmentLaw& law, double u) {
  double a = law.lo();
  double b = law.hi();
  const double tol = 1e-12 * std::max(1.0, b - a);
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    if (law.cdf(mid) <= u) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

EnvironmentLaw EnvironmentLaw::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    std::ostringstream os;
    os << "uniform law needs finite lo < hi, got [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
  EnvironmentLaw law;
  law.lo_ = lo;
  law.hi_ = hi;
  law.mean_ = 0.5 * (lo + hi);
  std::ostringstream name;
  name.precision(17);
  name << "uniform:" << lo << "," << hi;
  law.name_ = name.str();
  const double width = hi - lo;
  law.density_ = [lo, hi, width](double x) { return (x > lo && x < hi) ? 1.0 / width : 0.0; };
  law.cdf_closed_ = [lo, hi, width](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    return (x - lo) / width;
  };
  law.h_closed_ = [lo, hi](double x) { return 0.5 * (hi - x) * (x - lo); };
  law.quantile_closed_ = [lo, width](double u) { return lo + width * u; };
  return law;
}

EnvironmentLaw EnvironmentLaw::from_density(double lo, double hi, RealFn density, std::string name,
                                            QuadratureSpec quad) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw ConfigError("density law needs finite lo < hi");
  }
  if (!density) throw ConfigError("density law needs a density function");
  quad.validate();
  EnvironmentLaw law;
  law.lo_ = lo;
  law.hi_ = hi;
  law.name_ = std::move(name);
  law.quad_ = quad;
  law.density_ = [lo, hi, density = std::move(density)](double x) {
    return (x > lo && x < hi) ? density(x) : 0.0;
  };
  const double mass = integrate(law.density_, lo, hi, quad);
  if (std::abs(mass - 1.0) > 1e-10) {
    std::ostringstream os;
    os.precision(17);
    os << "density law '" << law.name_ << "' integrates to " << mass << ", not 1";
    throw ConfigError(os.str());
  }
  law.mean_ = integrate([&](double x) { return x * law.density_(x); }, lo, hi, quad);
  return law;
}

EnvironmentLaw EnvironmentLaw::from_table(std::vector<double> xs, std::vector<double> fs) {
  auto table = build_table(std::move(xs), std::move(fs));
  EnvironmentLaw law;
  law.lo_ = table->xs.front();
  law.hi_ = table->xs.back();
  law.mean_ = table->mean;
  std::ostringstream name;
  name << "table(" << table->xs.size() << " samples)";
  law.name_ = name.str();
  law.density_ = [table](double x) { return table->density(x); };
  law.cdf_closed_ = [table](double x) { return table->cdf(x); };
  law.h_closed_ = [table](double x) { return table->q(x) / table->density(x); };
  return law;
}

EnvironmentLaw EnvironmentLaw::from_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table law file: " + path.string());
  std::vector<double> xs, fs;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x = 0.0, f = 0.0;
    if (!(ls >> x >> f)) {
      if (xs.empty()) continue;  // header
      throw ConfigError("table law " + path.string() + ": malformed row " + std::to_string(row));
    }
    xs.push_back(x);
    fs.push_back(f);
  }
  auto law = from_table(std::move(xs), std::move(fs));
  law.name_ = "table:" + path.string();
  return law;
}

EnvironmentLaw EnvironmentLaw::shifted(double offset) const {
  if (!std::isfinite(offset)) throw ConfigError("shift offset must be finite");
  EnvironmentLaw law = *this;
  law.lo_ += offset;
  law.hi_ += offset;
  law.mean_ += offset;
  std::ostringstream name;
  name.precision(17);
  name << name_ << "+(" << offset << ")";
  law.name_ = name.str();
  law.density_ = [f = density_, offset](double x) { return f(x - offset); };
  if (cdf_closed_) law.cdf_closed_ = [c = cdf_closed_, offset](double x) { return c(x - offset); };
  if (h_closed_) law.h_closed_ = [h = h_closed_, offset](double x) { return h(x - offset); };
  if (quantile_closed_) {
    law.quantile_closed_ = [q = quantile_closed_, offset](double u) { return q(u) + offset; };
  }
  return law;
}

double EnvironmentLaw::clamp_interior(double x) const {
  return std::clamp(x, lo_ + guard(), hi_ - guard());
}

double EnvironmentLaw::density(double x) const { return density_(x); }

double EnvironmentLaw::cdf(double x) const {
  if (cdf_closed_) return cdf_closed_(x);
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return std::clamp(integrate(density_, lo_, x, quad_), 0.0, 1.0);
}

double EnvironmentLaw::quantile(double u) const {
  if (!(u >= 0.0 && u < 1.0)) throw ConfigError("quantile argument must lie in [0, 1)");
  const double x = quantile_closed_ ? quantile_closed_(u) : bisect_quantile(*this, u);
  return clamp_interior(x);
}

double EnvironmentLaw::h(double x) const {
  if (!(x > lo_ && x < hi_)) {
    std::ostringstream os;
    os.precision(17);
    os << "h is undefined at x=" << x << " outside the open support (" << lo_ << ", " << hi_ << ")";
    throw ConfigError(os.str());
  }
  x = clamp_interior(x);
  if (h_closed_) return h_closed_(x);
  // Integrate from the nearer side of the mean; both forms are equal because
  // the centered first moment vanishes.
  double q = 0.0;
  if (x <= mean_) {
    q = integrate([&](double y) { return (mean_ - y) * density_(y); }, lo_, x, quad_);
  } else {
    q = integrate([&](double y) { return (y - mean_) * density_(y); }, x, hi_, quad_);
  }
  return q / density_(x);
}

EnvironmentLaw make_uniform(double lo, double hi) { return EnvironmentLaw::uniform(lo, hi); }

double h_eval(const EnvironmentLaw& law, double x) { return law.h(x); }

std::vector<double> interior_grid(const EnvironmentLaw& law, int count) {
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double w = law.hi() - law.lo();
  for (int i = 0; i < count; ++i) grid[i] = law.lo() + w * (i + 1) / (count + 1.0);
  return grid;
}

double poincare_constant(const EnvironmentLaw& law) {
  const auto grid = interior_grid(law, 4096);
  std::size_t best = 0;
  double best_h = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = law.h(grid[i]);
    if (v > best_h) {
      best_h = v;
      best = i;
    }
  }
  double a = best == 0 ? law.clamp_interior(law.lo()) : grid[best - 1];
  double b = best + 1 == grid.size() ? law.clamp_interior(law.hi()) : grid[best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double hc = law.h(c);
  double hd = law.h(d);
  while (b - a > 1e-8) {
    if (hc > hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - inv_phi * (b - a);
      hc = law.h(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + inv_phi * (b - a);
      hd = law.h(d);
    }
  }
  return std::max({best_h, hc, hd, law.h(0.5 * (a + b))});
}

double phi(const EnvironmentLaw& law, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("phi needs lambda >= 0");
  if (lambda == 0.0) return 1.0;
  return integrate([&](double x) { return std::exp(-lambda * law.h(x)) * law.density(x); }, law.lo(),
                   law.hi(), law.quadrature());
}

double kappa_threshold(int d) {
  return -2.0 * std::numbers::ln2 - 2.0 * std::log(2.0 * d) - 4.0;
}

double kappa(const EnvironmentLaw& law, int d) {
  if (d < 1) throw ConfigError("kappa needs d >= 1");
  const double target = kappa_threshold(d);
  auto reached = [&](double lambda) { return std::log(phi(law, lambda)) <= target; };
  double lo = 0.0;
  double hi = 1.0;
  if (reached(hi)) {
    // Shrink until the threshold fails; lambda = 0 never reaches it.
    while (reached(hi * 0.5) && hi > 1e-300) hi *= 0.5;
    lo = hi * 0.5;
  } else {
    while (!reached(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) {
        throw NumericalError("kappa: log phi threshold not reached for lambda <= 1e12 (law '" +
                             law.name() + "')");
      }
    }
  }
  while ((hi - lo) > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (reached(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 1.0 / hi;
}

double check_ibp(const EnvironmentLaw& law, const RealFn& g, const RealFn& g_prime) {
  const double m = law.mean();
  const auto& q = law.quadrature();
  const double lhs = integrate([&](double x) { return (x - m) * g(x) * law.density(x); }, law.lo(), law.hi(), q);
  const double rhs = integrate([&](double x) { return law.h(x) * g_prime(x) * law.density(x); }, law.lo(),
                               law.hi(), q);
  return std::abs(lhs - rhs);
}

double check_poincare(const EnvironmentLaw& law, const RealFn& g, const RealFn& g_prime) {
  const auto& q = law.quadrature();
  const double eg = integrate([&](double x) { return g(x) * law.density(x); }, law.lo(), law.hi(), q);
  const double var = integrate(
      [&](double x) {
        const double c = g(x) - eg;
        return c * c * law.density(x);
      },
      law.lo(), law.hi(), q);
  const double energy = integrate(
      [&](double x) {
        const double gp = g_prime(x);
        return gp * gp * law.density(x);
      },
      law.lo(), law.hi(), q);
  return poincare_constant(law) * energy - var;
}

TensorizedMargin check_poincare_tensorized(const EnvironmentLaw& law, int n, const MultiFn& g,
                                           std::span<const MultiFn> partials, int mc_samples,
                                           std::uint64_t seed) {
  if (n < 1 || n > 6) throw ConfigError("tensorized Poincare check supports 1 <= n <= 6");
  if (static_cast<int>(partials.size()) != n) throw ConfigError("need one partial derivative per coordinate");
  if (mc_samples < 1000) throw ConfigError("tensorized Poincare check needs mc_samples >= 1000");
  const double K = poincare_constant(law);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> gv(mc_samples), energy(mc_samples);
  std::vector<double> x(n);
  for (int s = 0; s < mc_samples; ++s) {
    for (int i = 0; i < n; ++i) x[i] = law.quantile(unif(gen));
    gv[s] = g(x);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = partials[i](x);
      e += d * d;
    }
    energy[s] = e;
  }
  const double N = mc_samples;
  double gmean = 0.0;
  for (double v : gv) gmean += v;
  gmean /= N;
  // Per-sample contribution K * |grad g|^2 - (g - mean)^2; its mean is the
  // margin up to the N/(N-1) variance correction.
  std::vector<double> y(mc_samples);
  double ymean = 0.0;
  double var = 0.0;
  for (int s = 0; s < mc_samples; ++s) {
    const double c = gv[s] - gmean;
    var += c * c;
    y[s] = K * energy[s] - c * c;
    ymean += y[s];
  }
  var /= (N - 1.0);
  ymean /= N;
  double yvar = 0.0;
  for (double v : y) yvar += (v - ymean) * (v - ymean);
  yvar /= (N - 1.0);
  double emean = 0.0;
  for (double e : energy) emean += e;
  emean /= N;
  return {K * emean - var, std::sqrt(yvar / N)};
}

LawDiagnostics validate_law(const EnvironmentLaw& law) {
  LawDiagnostics diag;
  const auto& q = law.quadrature();
  const double m = law.mean();
  diag.density_integral = integrate([&](double x) { return law.density(x); }, law.lo(), law.hi(), q);
  diag.centered_moment = integrate([&](double x) { return (x - m) * law.density(x); }, law.lo(), law.hi(), q);
  diag.mean_residual = std::abs(diag.centered_moment);
  if (std::abs(diag.density_integral - 1.0) > 1e-10) diag.problems.push_back("density does not integrate to 1");
  if (diag.mean_residual > 1e-10) diag.problems.push_back("mean disagrees with the first moment");

  const auto grid = interior_grid(law, 4096);
  diag.min_h = std::numeric_limits<double>::infinity();
  const double step = 1e-6 * (law.hi() - law.lo());
  for (double x : grid) {
    const double hx = law.h(x);
    diag.min_h = std::min(diag.min_h, hx);
    const double a = std::max(x - step, law.lo() + law.guard());
    const double b = std::min(x + step, law.hi() - law.guard());
    const double slope = (law.h(b) - law.h(a)) / (b - a);
    diag.max_abs_h_prime = std::max(diag.max_abs_h_prime, std::abs(slope));
    if (!std::isfinite(hx) || !std::isfinite(slope)) {
      diag.problems.push_back("h or h' is not finite on the grid");
      break;
    }
  }
  if (!(diag.min_h > 0.0)) diag.problems.push_back("h is not strictly positive on the grid");
  diag.ok = diag.problems.empty();
  return diag;
}

}  // namespace polylab
