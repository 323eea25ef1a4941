#pragma once

// Exact Gibbs-measure computation for one quenched environment. Paths of
// length n from the origin carry weight exp(beta * sum_k omega(k, x_k)); the
// transfer-matrix recursion below produces every step marginal theta(k, x)
// and log Z without enumerating paths.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "polylab/env.hpp"
#include "polylab/lattice.hpp"
#include "polylab/rng.hpp"

namespace polylab {

struct PolymerInstance {
  int d = 1;
  int n = 1;
  double beta = 0.0;
  EnvironmentLaw law = EnvironmentLaw::uniform(-1.0, 1.0);
  std::uint64_t seed = 0;
  // When set, environment values are omega - m.
  bool centered = false;

  void validate() const;
  // Support of the values the engine sees: (a, b), or (a - m, b - m) when centered.
  double value_lo() const { return centered ? law.lo() - law.mean() : law.lo(); }
  double value_hi() const { return centered ? law.hi() - law.mean() : law.hi(); }
  // Maps an engine value back to the law's own coordinate (adds m when centered).
  double raw_value(double omega) const { return centered ? omega + law.mean() : omega; }
};

// Sparse replacements layered over the lazy generator, in engine coordinates.
// Precedence: point value, then layer constant, then layer reseed.
struct EnvironmentOverrides {
  std::unordered_map<PackedSite, double, PackedSiteHash> point_values;
  std::map<int, double> layer_constant;
  std::map<int, std::uint64_t> layer_seed;

  bool empty() const { return point_values.empty() && layer_constant.empty() && layer_seed.empty(); }
};

class Environment {
 public:
  explicit Environment(const PolymerInstance& instance, const EnvironmentOverrides* overrides = nullptr);

  // No reachability check; coords must have length d.
  double value(int k, std::span<const Coord> coords) const;

  // Fills out[i] with the value at site i of layer k of the cone.
  void layer_values(const Cone& cone, int k, std::span<double> out) const;

 private:
  const PolymerInstance& instance_;
  const EnvironmentOverrides* overrides_;
};

// Checked access: 1 <= k <= n and x reachable at step k.
double env_value(const PolymerInstance& instance, int k, const Site& x);

struct ThetaSolution {
  std::shared_ptr<const Cone> cone;
  // theta[k-1] holds step k; forward[k] holds the normalized forward layer
  // for k = 0..n (forward[0] is the unit mass at the origin).
  std::vector<LayerField> theta;
  std::vector<std::vector<double>> forward;
  double log_partition = 0.0;
  // log of the per-step forward normalizer; sums to log_partition.
  std::vector<double> layer_lognorms;

  int dim() const { return cone->dim(); }
  int length() const { return cone->length(); }
  const LayerField& layer(int k) const { return theta.at(static_cast<std::size_t>(k - 1)); }
  double theta_at(int k, const Site& x) const { return layer(k).at(x); }
};

ThetaSolution forward_backward(const PolymerInstance& instance, const EnvironmentOverrides& overrides = {});

// Reuses a cone already built for (d, n).
ThetaSolution forward_backward(const PolymerInstance& instance, std::shared_ptr<const Cone> cone,
                               const EnvironmentOverrides& overrides = {});

// Everything about step k that does not depend on the step-k disorder:
// theta(k, x) is proportional to inflow[x] * exp(beta omega(k, x)) * outflow[x].
struct LayerConditional {
  int k = 0;
  std::vector<double> inflow;   // sum of normalized forward mass over predecessors
  std::vector<double> outflow;  // normalized backward layer
};

LayerConditional layer_conditional(const PolymerInstance& instance, const Cone& cone, int k);

struct BruteForceResult {
  std::vector<std::map<Site, double>> theta;  // theta[k-1] for step k
  double log_partition = 0.0;
  double rho = 0.0;
  double ell = 0.0;
  PolymerPath argmax_path;
  std::uint64_t path_count = 0;

  double theta_at(int k, const Site& x) const;
};

inline constexpr double kBruteForceMaxPaths = 2e7;

// Literal enumeration of all (2d)^n paths; rejects instances above the cap.
BruteForceResult brute_force(const PolymerInstance& instance);

// Exact draw from the Gibbs measure: the endpoint from the last forward
// layer, then each earlier step from the forward layer restricted to the
// neighbors of the step after it.
PolymerPath sample_path(const ThetaSolution& solution, SplitMix64& rng);

// Gibbs marginals with every step-k environment value replaced by 0.
ThetaSolution zero_layer_solution(const PolymerInstance& instance, int k);

struct DerivativeCheck {
  double analytic = 0.0;
  double numeric = 0.0;
  bool clamped = false;
};

inline constexpr double kDefaultFdStep = 1e-6;

// Compares beta * theta * (1 - theta) with a central finite difference of
// theta(k, x) in omega(k, x).
DerivativeCheck theta_derivative_check(const PolymerInstance& instance, const ThetaSolution& solution, int k,
                                       const Site& x, double fd_step = kDefaultFdStep);

// CSV rows "k,site,theta" for every reachable site.
void write_theta_csv(const ThetaSolution& solution, std::ostream& out);
// {log_partition, seed, d, n, beta}
void write_theta_sidecar(const ThetaSolution& solution, const PolymerInstance& instance, std::ostream& out);

}  // namespace polylab
