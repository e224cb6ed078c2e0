#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "netkf/errors.hpp"

namespace netkf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Time index k in N_0.
using TimeIndex = std::uint64_t;

/// Relative singular-value cutoff used for every "full rank" decision.
class RankTolerance {
 public:
  static constexpr double kDefault = 1e-10;

  constexpr RankTolerance() = default;
  explicit RankTolerance(double relative_threshold);

  constexpr double value() const noexcept { return relative_threshold_; }

 private:
  double relative_threshold_ = kDefault;
};

/// A bounded time-varying sequence stored as one period: seq(k) = table[k mod T].
template <typename T>
class PeriodicSequence {
 public:
  PeriodicSequence() = default;
  explicit PeriodicSequence(std::vector<T> period) : period_(std::move(period)) {}

  const T& operator()(TimeIndex k) const { return period_[k % period_.size()]; }
  std::size_t period() const noexcept { return period_.size(); }
  bool empty() const noexcept { return period_.empty(); }
  const std::vector<T>& table() const noexcept { return period_; }

 private:
  std::vector<T> period_;
};

/// sqrt(lambda_max(m^T m)), computed from the singular values of m.
double spectral_norm(const Matrix& m);

/// Count of singular values above tol * sigma_max * max(rows, cols).
std::size_t numerical_rank(const Matrix& m, RankTolerance tol = RankTolerance{});

bool has_full_column_rank(const Matrix& m, RankTolerance tol = RankTolerance{});

/// Phi(ell, k) = A(ell-1) ... A(k), accumulated right-to-left; Phi(k, k) = I.
Matrix transition_matrix(const PeriodicSequence<Matrix>& a, TimeIndex ell, TimeIndex k);

/// Left-multiplies `m` by A(from), A(from+1), ..., A(to-1) in that order.
/// transition_matrix(a, ell, k) == propagate(a, ell, j, transition_matrix(a, j, k))
/// holds bit-for-bit.
Matrix propagate(const PeriodicSequence<Matrix>& a, TimeIndex to, TimeIndex from, Matrix m);

/// Vertical stack of C(k+i) Phi(k+i, k) for i = 0..t, where c_rows[i] = C(k+i).
Matrix observability_matrix(const PeriodicSequence<Matrix>& a, std::span<const Matrix> c_rows,
                            TimeIndex k, std::size_t t);

/// Largest/smallest eigenvalue ratio of a symmetric matrix (infinity if singular).
double condition_estimate(const Matrix& symmetric);

}  // namespace netkf
