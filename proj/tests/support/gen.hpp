#pragma once

// Hand-rolled generators for the property tests.

#include <cstddef>
#include <random>

#include "netkf/network.hpp"
#include "netkf/numerics.hpp"
#include "netkf/plant.hpp"
#include "oracles.hpp"

namespace gen {

using netkf::Matrix;
using netkf::Vector;

inline double uni(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t pick(std::mt19937_64& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline Matrix matrix(std::mt19937_64& g, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uni(g, -scale, scale);
  return m;
}

inline Matrix spd(std::mt19937_64& g, Eigen::Index n, double floor = 0.1) {
  const Matrix b = matrix(g, n, n);
  return b * b.transpose() + floor * Matrix::Identity(n, n);
}

// Well-conditioned invertible matrix: identity plus a small perturbation.
inline Matrix invertible(std::mt19937_64& g, Eigen::Index n) {
  return Matrix::Identity(n, n) * uni(g, 1.0, 2.0) + matrix(g, n, n, 0.3);
}

inline Matrix stochastic(std::mt19937_64& g, Eigen::Index n) {
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      p(i, j) = uni(g, 0.0, 1.0);
      s += p(i, j);
    }
    p.row(i) /= s;
  }
  return p;
}

inline netkf::MarkovNetworkChain markov(std::mt19937_64& g, Eigen::Index states) {
  netkf::MarkovNetworkChain c;
  c.transition = stochastic(g, states);
  c.initial = Vector::Zero(states);
  c.initial(0) = 1.0;
  return c;
}

inline netkf::PhiTable phi(std::mt19937_64& g, Eigen::Index sensors, Eigen::Index states) {
  netkf::PhiTable t(sensors, states);
  for (Eigen::Index i = 0; i < sensors; ++i)
    for (Eigen::Index j = 0; j < states; ++j) t(i, j) = uni(g, 0.0, 1.0);
  return t;
}

inline netkf::PlantModel plant(const Matrix& a, const std::vector<Matrix>& c_rows, double q = 1.0,
                               double r = 1.0) {
  netkf::PlantModel p;
  p.n = a.rows();
  p.a_table = netkf::PeriodicSequence<Matrix>({a});
  p.q_table = netkf::PeriodicSequence<Matrix>({q * Matrix::Identity(p.n, p.n)});
  for (const auto& c : c_rows) {
    p.sensors.push_back({c, netkf::PeriodicSequence<Matrix>({r * Matrix::Identity(c.rows(), c.rows())})});
  }
  p.x0 = Vector::Zero(p.n);
  p.p0 = Matrix::Identity(p.n, p.n);
  return p;
}

inline oracle::Mat to_oracle(const Matrix& m) {
  oracle::Mat o(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      o(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  return o;
}

inline double max_abs_diff(const oracle::Mat& o, const Matrix& m) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      d = std::max(d, std::abs(o(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - m(i, j)));
  return d;
}

}  // namespace gen
