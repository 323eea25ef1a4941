#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace polylab {

struct CheckResult {
  std::string family;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  // Test hook: shifts one theta entry of the normalization instance so that
  // the run must fail at the normalization family.
  bool perturb_theta = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  // nullptr when everything passed.
  const CheckResult* first_failure() const;
  std::size_t family_count() const;
  nlohmann::ordered_json to_json() const;
};

// Runs the oracle and property battery: law self-checks, integration by
// parts, Poincare and its tensorized form, kappa, cone geometry, layer
// normalization, brute-force equivalence, the beta = 0 binomial reduction,
// the ell/rho chain and floors, the zero-layer sandwich, the theta
// derivative identity and determinism.
VerifyReport run_verification(const VerifyOptions& options = {});

// Simple random walk marginal on Z: P(S_k = x) = C(k, (k+x)/2) 2^-k.
double srw_marginal_1d(int k, long long x);

}  // namespace polylab
