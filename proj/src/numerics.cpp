#include "netkf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace netkf {

RankTolerance::RankTolerance(double relative_threshold) : relative_threshold_(relative_threshold) {
  if (!(relative_threshold > 0.0 && relative_threshold < 1.0)) {
    throw std::invalid_argument("rank tolerance must lie in (0, 1), got " +
                                std::to_string(relative_threshold));
  }
}

namespace {

Vector singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) {
    throw DimensionError("spectral_norm of an empty matrix");
  }
  if (!m.allFinite()) {
    throw DimensionError("spectral_norm of a matrix with non-finite entries");
  }
  return singular_values(m)(0);
}

std::size_t numerical_rank(const Matrix& m, RankTolerance tol) {
  if (m.size() == 0) {
    return 0;
  }
  const Vector s = singular_values(m);
  const double largest = s(0);
  if (largest == 0.0) {
    return 0;
  }
  const double cutoff =
      tol.value() * largest * static_cast<double>(std::max(m.rows(), m.cols()));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) {
      ++rank;
    }
  }
  return rank;
}

bool has_full_column_rank(const Matrix& m, RankTolerance tol) {
  return m.rows() >= m.cols() && numerical_rank(m, tol) == static_cast<std::size_t>(m.cols());
}

Matrix propagate(const PeriodicSequence<Matrix>& a, TimeIndex to, TimeIndex from, Matrix m) {
  if (to < from) {
    throw std::invalid_argument("propagate: end time precedes start time");
  }
  for (TimeIndex j = from; j < to; ++j) {
    const Matrix& step = a(j);
    if (step.cols() != m.rows()) {
      throw DimensionError("propagate: A(k) does not conform with the propagated matrix");
    }
    Matrix next = step * m;
    m = std::move(next);
  }
  return m;
}

Matrix transition_matrix(const PeriodicSequence<Matrix>& a, TimeIndex ell, TimeIndex k) {
  if (ell < k) {
    throw std::invalid_argument("transition_matrix: ell must be >= k");
  }
  if (a.empty()) {
    throw DimensionError("transition_matrix: empty A table");
  }
  const Eigen::Index n = a(k).rows();
  return propagate(a, ell, k, Matrix::Identity(n, n));
}

Matrix observability_matrix(const PeriodicSequence<Matrix>& a, std::span<const Matrix> c_rows,
                            TimeIndex k, std::size_t t) {
  if (c_rows.size() != t + 1) {
    throw DimensionError("observability_matrix: expected t+1 observation matrices");
  }
  if (a.empty()) {
    throw DimensionError("observability_matrix: empty A table");
  }
  const Eigen::Index n = a(k).cols();
  Eigen::Index rows = 0;
  for (const Matrix& c : c_rows) {
    if (c.cols() != n) {
      throw DimensionError("observability_matrix: C(k+i) has " + std::to_string(c.cols()) +
                           " columns, expected " + std::to_string(n));
    }
    rows += c.rows();
  }
  Matrix out(rows, n);
  Matrix phi = Matrix::Identity(n, n);
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i <= t; ++i) {
    if (i > 0) {
      phi = propagate(a, k + i, k + i - 1, std::move(phi));
    }
    const Matrix& c = c_rows[i];
    out.middleRows(offset, c.rows()) = c * phi;
    offset += c.rows();
  }
  return out;
}

double condition_estimate(const Matrix& symmetric) {
  if (symmetric.size() == 0) {
    return 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return hi / lo;
}

}  // namespace netkf
