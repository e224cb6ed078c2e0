#pragma once

#include <span>
#include <string>

namespace netkf {

/// Fitted envelope alpha * rho^k + beta for a mean tr P(k|k-1) series.
struct BoundFit {
  double alpha = 0.0;
  double rho = 0.0;
  double beta = 0.0;
  /// max over k of (series[k] - (alpha rho^k + beta)), clipped below at 0.
  double residual = 0.0;
  bool success = false;
  std::string verdict;
};

struct BoundFitOptions {
  /// The fit is accepted when residual <= relative_residual * beta.
  double relative_residual = 0.05;
  /// Fits with rho this close to 1 are treated as "no contraction".
  double rho_ceiling = 1.0 - 1e-6;
};

/// Least-squares fit with rho in [0, 1): a coarse grid then golden-section
/// search over rho, with (alpha, beta) >= 0 solved in closed form at each rho.
/// Failing to find a bound is reported in the result, not thrown. Throws
/// std::invalid_argument on fewer than 50 points or non-finite entries.
BoundFit fit_bound(std::span<const double> series, const BoundFitOptions& options = {});

}  // namespace netkf
