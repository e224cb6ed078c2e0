#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "netkf/monte_carlo.hpp"

namespace netkf {

/// Conditional sample means of V_{k+1} given (Xi(k-1), decile of V_k).
struct DriftBin {
  std::size_t state = 0;
  std::size_t decile = 0;
  std::size_t count = 0;
  double v_lo = 0.0;  // decile edges of V_k within the state
  double v_hi = 0.0;
  double mean_v = 0.0;
  double mean_v_next = 0.0;
  double beta = 0.0;  // mean_v_next - rho * mean_v
  bool inconclusive = false;
};

struct DriftProbeOptions {
  std::size_t min_samples = 10000;
  std::size_t min_per_bin = 50;
  std::size_t bins_per_state = 10;
  /// beta_hat from the two halves of the trials must agree within this ratio.
  double stability_ratio = 2.0;
};

struct DriftProbe {
  double rho = 0.0;  // rho_cert the bins were tested against
  double beta_hat = 0.0;
  double beta_first_half = 0.0;
  double beta_second_half = 0.0;
  /// max beta over the lower and upper halves of the V_k deciles
  double beta_low_v = 0.0;
  double beta_high_v = 0.0;
  /// Least-squares slope of mean V_{k+1} on mean V_k across bins.
  double empirical_slope = 0.0;
  std::size_t samples = 0;
  std::vector<DriftBin> bins;
  bool passed = false;
  std::string verdict;
};

/// Checks mean(V_{k+1} | bin) <= rho * V_k + beta_hat for a finite beta_hat
/// that does not drift between trial halves or between low and high V_k.
/// Throws std::invalid_argument below options.min_samples triples.
DriftProbe drift_probe(std::span<const TrialLog> logs, double rho_cert,
                       const DriftProbeOptions& options = {});

}  // namespace netkf
