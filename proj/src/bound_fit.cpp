#include "netkf/bound_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace netkf {

namespace {

struct Candidate {
  double alpha = 0.0;
  double beta = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// Nonnegative least squares for y ~ alpha * rho^k + beta at fixed rho.
Candidate solve_at(std::span<const double> y, double rho) {
  const auto n = static_cast<double>(y.size());
  double s_g = 0.0, s_gg = 0.0, s_y = 0.0, s_gy = 0.0;
  double g = 1.0;
  for (double v : y) {
    s_g += g;
    s_gg += g * g;
    s_y += v;
    s_gy += g * v;
    g *= rho;
  }
  auto sse_of = [&](double a, double b) {
    double sse = 0.0;
    double gk = 1.0;
    for (double v : y) {
      const double r = v - (a * gk + b);
      sse += r * r;
      gk *= rho;
    }
    return sse;
  };
  Candidate best;
  const double det = n * s_gg - s_g * s_g;
  if (std::abs(det) > 1e-300) {
    const double a = (n * s_gy - s_g * s_y) / det;
    const double b = (s_gg * s_y - s_g * s_gy) / det;
    if (a >= 0.0 && b >= 0.0) {
      best = {a, b, sse_of(a, b)};
      return best;
    }
  }
  // Boundary solutions: alpha = 0 or beta = 0.
  const double b_only = std::max(0.0, s_y / n);
  Candidate c1{0.0, b_only, sse_of(0.0, b_only)};
  const double a_only = s_gg > 0.0 ? std::max(0.0, s_gy / s_gg) : 0.0;
  Candidate c2{a_only, 0.0, sse_of(a_only, 0.0)};
  return c1.sse <= c2.sse ? c1 : c2;
}

}  // namespace

BoundFit fit_bound(std::span<const double> series, const BoundFitOptions& options) {
  if (series.size() < 50) {
    throw std::invalid_argument("fit_bound: need at least 50 points, got " +
                                std::to_string(series.size()));
  }
  if (std::any_of(series.begin(), series.end(), [](double v) { return !std::isfinite(v); })) {
    throw std::invalid_argument("fit_bound: series has non-finite entries");
  }

  const double rho_max = 1.0 - 1e-9;
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) {
    grid.push_back(0.999 * i / 400.0);
  }
  for (double e = 3.0; e <= 9.0; e += 0.25) {
    grid.push_back(1.0 - std::pow(10.0, -e));
  }
  std::sort(grid.begin(), grid.end());

  std::size_t best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double sse = solve_at(series, grid[i]).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  hi = std::min(hi, rho_max);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = solve_at(series, x1).sse;
  double f2 = solve_at(series, x2).sse;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = solve_at(series, x1).sse;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = solve_at(series, x2).sse;
    }
  }
  double rho = 0.5 * (lo + hi);
  Candidate c = solve_at(series, rho);
  const Candidate at_grid = solve_at(series, grid[best]);
  if (at_grid.sse < c.sse) {
    rho = grid[best];
    c = at_grid;
  }

  BoundFit fit;
  fit.alpha = c.alpha;
  fit.beta = c.beta;
  fit.rho = rho;
  double g = 1.0;
  for (double v : series) {
    fit.residual = std::max(fit.residual, v - (c.alpha * g + c.beta));
    g *= rho;
  }
  const bool contracts = rho < options.rho_ceiling;
  const bool tight = fit.residual <= options.relative_residual * fit.beta;
  fit.success = contracts && tight;
  if (fit.success) {
    fit.verdict = "exponential bound found";
  } else if (!contracts) {
    fit.verdict = "no exponential bound found (fitted rate does not contract)";
  } else {
    fit.verdict = "no exponential bound found (residual exceeds tolerance)";
  }
  return fit;
}

}  // namespace netkf
