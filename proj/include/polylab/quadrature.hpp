#pragma once

#include <functional>
#include <vector>

namespace polylab {

struct QuadratureSpec {
  int node_count = 256;
  double abs_tolerance = 1e-10;

  // Throws ConfigError unless node_count >= 64 and abs_tolerance > 0.
  void validate() const;
};

// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached per node count; the returned reference stays valid for the process
// lifetime.
const GaussLegendreRule& gauss_legendre(int node_count);

// Adaptive composite Gauss-Legendre: a panel is accepted when its one-panel
// estimate agrees with the sum of its two halves to within the panel's share
// of the tolerance; otherwise both halves are refined.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureSpec& spec = {});

}  // namespace polylab
