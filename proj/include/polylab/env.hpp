#pragma once

// Bounded-support environment laws and the h-function machinery built on
// them: h(x) = (integral over (x, b) of (y - m) f(y) dy) / f(x), its supremum K
// (the Poincare constant), the Laplace-type transform phi and the tail
// threshold kappa, plus quadrature checks of the integration-by-parts and
// Poincare inequalities.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polylab/quadrature.hpp"

namespace polylab {

using RealFn = std::function<double(double)>;
using MultiFn = std::function<double(std::span<const double>)>;

class EnvironmentLaw {
 public:
  // Uniform(lo, hi). Closed forms for everything, h(x) = (hi - x)(x - lo) / 2.
  static EnvironmentLaw uniform(double lo, double hi);

  // Generic density on (lo, hi); mean, CDF and h fall back to quadrature and
  // the quantile to bisection on the CDF. The density must be normalized.
  static EnvironmentLaw from_density(double lo, double hi, RealFn density, std::string name,
                                     QuadratureSpec quad = {});

  // Piecewise-linear density through (xs[i], fs[i]), rescaled to unit mass.
  // xs must be strictly increasing; fs must be > 0 at interior samples.
  // CDF and h are exact piecewise polynomials.
  static EnvironmentLaw from_table(std::vector<double> xs, std::vector<double> fs);

  // CSV with columns x,f (a header line is optional).
  static EnvironmentLaw from_table_csv(const std::filesystem::path& path);

  // Law of X + offset. Used for explicit centering; never applied implicitly.
  EnvironmentLaw shifted(double offset) const;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double mean() const { return mean_; }
  const std::string& name() const { return name_; }
  const QuadratureSpec& quadrature() const { return quad_; }
  bool has_closed_form_h() const { return static_cast<bool>(h_closed_); }

  // Width of the band kept clear of each endpoint: 1e-12 * (hi - lo).
  double guard() const { return 1e-12 * (hi_ - lo_); }
  // Clamps x into [lo + guard, hi - guard].
  double clamp_interior(double x) const;

  double density(double x) const;
  double cdf(double x) const;
  // Maps u in [0, 1) into the open support (guard band applied).
  double quantile(double u) const;
  // Throws ConfigError for x outside the open interval (lo, hi).
  double h(double x) const;

 private:
  EnvironmentLaw() = default;

  double lo_ = 0.0;
  double hi_ = 1.0;
  double mean_ = 0.5;
  std::string name_;
  QuadratureSpec quad_;
  RealFn density_;
  RealFn cdf_closed_;
  RealFn h_closed_;
  RealFn quantile_closed_;
};

// Free-function surface of the module.
EnvironmentLaw make_uniform(double lo, double hi);
double h_eval(const EnvironmentLaw& law, double x);

// Evenly spaced interior grid a + (b - a) * (i + 1) / (count + 1).
std::vector<double> interior_grid(const EnvironmentLaw& law, int count = 4096);

// K = sup h: 4096-point grid supremum refined by golden-section search around
// the best grid point to 1e-8 in x.
double poincare_constant(const EnvironmentLaw& law);

// phi(lambda) = E exp(-lambda h(X)); exactly 1 at lambda = 0.
double phi(const EnvironmentLaw& law, double lambda);

// 1 / lambda* where lambda* is the smallest lambda (bisection, relative 1e-6)
// with log phi(lambda) <= -2 log 2 - 2 log(2d) - 4.
double kappa(const EnvironmentLaw& law, int d);
double kappa_threshold(int d);

// |E[(X - m) g(X)] - E[h(X) g'(X)]|.
double check_ibp(const EnvironmentLaw& law, const RealFn& g, const RealFn& g_prime);

// K E[g'(X)^2] - Var g(X); non-negative when the Poincare inequality holds.
double check_poincare(const EnvironmentLaw& law, const RealFn& g, const RealFn& g_prime);

struct TensorizedMargin {
  double margin = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of K sum_i E[(d_i g)^2] - Var g over n i.i.d. draws.
// Requires n <= 6, partials.size() == n and mc_samples >= 1000.
TensorizedMargin check_poincare_tensorized(const EnvironmentLaw& law, int n, const MultiFn& g,
                                           std::span<const MultiFn> partials, int mc_samples,
                                           std::uint64_t seed = 0x5eed);

struct LawDiagnostics {
  double density_integral = 0.0;
  double centered_moment = 0.0;  // integral of (x - m) f(x)
  double mean_residual = 0.0;    // |m - integral of x f(x)|
  double min_h = 0.0;
  double max_abs_h_prime = 0.0;
  bool ok = false;
  std::vector<std::string> problems;
};

// Runs the law self-checks on a 4096-point interior grid.
LawDiagnostics validate_law(const EnvironmentLaw& law);

}  // namespace polylab
