#pragma once

// Reference implementations used only by the tests. They deliberately avoid
// the library's code paths: plain row-major arrays, Gauss-Jordan inversion,
// the covariance-form Riccati update and brute-force enumeration.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

struct Mat {
  std::size_t r = 0, c = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * c + j]; }

  static Mat eye(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Mat mul(const Mat& a, const Mat& b) {
  if (a.c != b.r) throw std::logic_error("oracle::mul shape");
  Mat out(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t k = 0; k < a.c; ++k)
      for (std::size_t j = 0; j < b.c; ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

inline Mat tr(const Mat& a) {
  Mat out(a.c, a.r);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) out(j, i) = a(i, j);
  return out;
}

inline Mat add(const Mat& a, const Mat& b, double sb = 1.0) {
  Mat out = a;
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] += sb * b.v[i];
  return out;
}

// Gauss-Jordan with partial pivoting.
inline Mat inv(Mat a) {
  const std::size_t n = a.r;
  Mat e = Mat::eye(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (a(piv, col) == 0.0) throw std::runtime_error("oracle::inv singular");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(col, j), a(piv, j));
      std::swap(e(col, j), e(piv, j));
    }
    const double d = a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= d;
      e(col, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = a(i, col);
      for (std::size_t j = 0; j < n; ++j) {
        a(i, j) -= f * a(col, j);
        e(i, j) -= f * e(col, j);
      }
    }
  }
  return e;
}

inline double trace(const Mat& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.r; ++i) s += a(i, i);
  return s;
}

// Textbook predictor Riccati step in covariance form:
// P+ = A P A' + Q - A P C' (C P C' + R)^-1 C P A'.
inline Mat riccati_step(const Mat& p, const Mat& a, const Mat& q, const Mat& c, const Mat& r) {
  Mat apat = add(mul(mul(a, p), tr(a)), q);
  if (c.r == 0) return apat;
  const Mat s = add(mul(mul(c, p), tr(c)), r);
  const Mat apc = mul(mul(a, p), tr(c));
  return add(apat, mul(mul(apc, inv(s)), tr(apc)), -1.0);
}

// x+ = A x + A P C' S^-1 (y - C x)
inline std::vector<double> predictor_step(const std::vector<double>& x, const Mat& p, const Mat& a,
                                          const Mat& c, const Mat& r,
                                          const std::vector<double>& y) {
  Mat xm(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) xm(i, 0) = x[i];
  Mat out = mul(a, xm);
  if (c.r > 0) {
    const Mat s = add(mul(mul(c, p), tr(c)), r);
    const Mat k = mul(mul(mul(a, p), tr(c)), inv(s));
    Mat innov(y.size(), 1);
    const Mat cx = mul(c, xm);
    for (std::size_t i = 0; i < y.size(); ++i) innov(i, 0) = y[i] - cx(i, 0);
    out = add(out, mul(k, innov));
  }
  std::vector<double> res(out.r);
  for (std::size_t i = 0; i < out.r; ++i) res[i] = out(i, 0);
  return res;
}

// Largest singular value of a 2x2 matrix from the closed-form eigenvalues of
// A'A.
inline double spectral_norm_2x2(double a, double b, double c, double d) {
  const double p = a * a + c * c;
  const double q = a * b + c * d;
  const double s = b * b + d * d;
  const double lam = 0.5 * (p + s) + std::sqrt(0.25 * (p - s) * (p - s) + q * q);
  return std::sqrt(lam);
}

// Rank by Gaussian elimination with an absolute pivot threshold; adequate for
// the small well-scaled matrices the tests feed it.
inline std::size_t rank(Mat a, double eps = 1e-9) {
  std::size_t rk = 0;
  for (std::size_t col = 0; col < a.c && rk < a.r; ++col) {
    std::size_t piv = rk;
    for (std::size_t i = rk + 1; i < a.r; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (std::abs(a(piv, col)) <= eps) continue;
    for (std::size_t j = 0; j < a.c; ++j) std::swap(a(rk, j), a(piv, j));
    for (std::size_t i = rk + 1; i < a.r; ++i) {
      const double f = a(i, col) / a(rk, col);
      for (std::size_t j = 0; j < a.c; ++j) a(i, j) -= f * a(rk, j);
    }
    ++rk;
  }
  return rk;
}

// theta_m = product of gamma over the path from sensor m to the gateway.
inline std::vector<int> theta_of(const std::vector<std::size_t>& parent,
                                 const std::vector<int>& gamma) {
  std::vector<int> theta(gamma.size());
  for (std::size_t m = 1; m <= gamma.size(); ++m) {
    int ok = 1;
    for (std::size_t node = m; node != 0; node = parent[node - 1]) ok &= gamma[node - 1];
    theta[m - 1] = ok;
  }
  return theta;
}

// mu_i(delta) for one sensor with [C; C A^r] invertible for every r in
// 1..delta-1: the observability matrix is deficient iff at most one packet
// arrives in the interval.
inline double mu_two_row_closed_form(const std::vector<std::vector<double>>& q,
                                     const std::vector<double>& phi, std::size_t i,
                                     std::size_t delta) {
  if (delta == 1) return 1.0;
  double out = 0.0;
  const double d = static_cast<double>(delta);
  for (std::size_t j = 0; j < phi.size(); ++j) {
    out += q[i][j] * (std::pow(1.0 - phi[j], d) + d * std::pow(1.0 - phi[j], d - 1.0) * phi[j]);
  }
  return out;
}

}  // namespace oracle
