#pragma once

#include <functional>

namespace netkf {

/// Adaptive Gauss-Legendre quadrature on a finite interval.
///
/// Each panel is integrated with a 10-point rule, then again as two halves;
/// panels whose two estimates differ by more than the local tolerance are
/// bisected. Tolerance is absolute and is split evenly between children.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double abs_tol = 1e-12, int max_depth = 40);

}  // namespace netkf
