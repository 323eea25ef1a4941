#pragma once

// Localization functionals of a solved instance.
//
//   alpha_k = sum_x theta(k, x)^2        two replicas meet at step k
//   rho     = (1/n) sum_k alpha_k        expected replica overlap fraction
//   ell     = max_p (1/n) sum_k theta(k, p_k)
//   gamma_k = sum_x h(omega(k, x)) theta(k, x)
//   tau_k   = sum_x omega(k, x) theta(k, x)

#include <cstdint>
#include <span>
#include <vector>

#include "polylab/engine.hpp"

namespace polylab {

std::vector<double> alpha_profile(const ThetaSolution& solution);
double rho(const ThetaSolution& solution);

struct EllResult {
  double ell = 0.0;
  PolymerPath path;
  // sum_k theta(k, path_k); equals n * ell.
  double score = 0.0;
};

// Layered longest-path DP over every nearest-neighbor path from the origin.
// Ties go to the lexicographically smallest site.
EllResult ell(const ThetaSolution& solution);

struct GammaTauProfiles {
  std::vector<double> gamma;
  std::vector<double> tau;
};

// h is evaluated against the law's own coordinate (omega + m when centered).
GammaTauProfiles gamma_tau_profiles(const ThetaSolution& solution, const PolymerInstance& instance);

// sum over k in index_set (1-based, distinct) of h(omega(k, path_k)).
double psi(const PolymerInstance& instance, const PolymerPath& path, std::span<const int> index_set);

struct PrimedEstimates {
  double alpha_k = 0.0;  // realized alpha_k
  double gamma_k = 0.0;  // realized gamma_k
  double alpha_prime = 0.0;
  double gamma_prime = 0.0;
  double alpha_se = 0.0;
  double gamma_se = 0.0;
  int resamples = 0;
};

// Monte Carlo estimates of E(alpha_k | everything but step k) and the same for
// gamma_k: the step-k disorder is redrawn `resamples` times from derived
// sub-seeds while the rest of the environment stays fixed. Only step k is
// recomputed per draw.
PrimedEstimates primed_estimates(const PolymerInstance& instance, int k, int resamples);

// Seed used for the r-th redraw of step k.
std::uint64_t layer_resample_seed(std::uint64_t seed, int k, int r);

struct LocalizationReport {
  double rho = 0.0;
  double ell = 0.0;
  PolymerPath argmax_path;
  std::vector<double> alpha_profile;
  std::vector<double> gamma_profile;
  std::vector<double> tau_profile;
};

LocalizationReport localization_report(const ThetaSolution& solution, const PolymerInstance& instance,
                                       bool with_gamma_tau = true);

}  // namespace polylab
