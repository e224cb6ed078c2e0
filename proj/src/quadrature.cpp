#include "netkf/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace netkf {

namespace {

constexpr int kOrder = 10;

struct Rule {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};
};

// Legendre roots by Newton iteration on the three-term recurrence.
Rule make_rule() {
  Rule rule;
  for (int i = 0; i < kOrder; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= kOrder; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

double panel(const std::function<double(double)>& f, double lo, double hi) {
  const Rule& r = rule();
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (int i = 0; i < kOrder; ++i) {
    sum += r.weights[i] * f(mid + half * r.nodes[i]);
  }
  return sum * half;
}

double refine(const std::function<double(double)>& f, double lo, double hi, double whole,
              double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = panel(f, lo, mid);
  const double right = panel(f, mid, hi);
  const double split = left + right;
  if (depth <= 0 || std::abs(split - whole) <= tol) {
    return split;
  }
  return refine(f, lo, mid, left, 0.5 * tol, depth - 1) +
         refine(f, mid, hi, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double abs_tol, int max_depth) {
  if (lo == hi) {
    return 0.0;
  }
  return refine(f, lo, hi, panel(f, lo, hi), abs_tol, max_depth);
}

}  // namespace netkf
