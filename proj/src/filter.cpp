#include "netkf/filter.hpp"

#include <string>

#include <Eigen/Cholesky>

namespace netkf {

namespace {

struct Innovation {
  Eigen::LLT<Matrix> llt;
  Matrix pct;  // P C^T
};

Innovation factor_innovation(const Matrix& p, const Matrix& c, const Matrix& r) {
  if (c.cols() != p.rows() || r.rows() != c.rows() || r.cols() != c.rows()) {
    throw DimensionError("kf_step: observation dimensions do not match the state");
  }
  Innovation inn;
  inn.pct = p * c.transpose();
  Matrix s = c * inn.pct + r;
  s = (0.5 * (s + s.transpose())).eval();
  inn.llt.compute(s);
  if (inn.llt.info() != Eigen::Success) {
    const double cond = condition_estimate(s);
    throw NumericalError("kf_step: innovation covariance is not positive definite (condition " +
                             std::to_string(cond) + ")",
                         cond);
  }
  return inn;
}

}  // namespace

Matrix kalman_gain(const Matrix& p, const Matrix& a, const Matrix& c, const Matrix& r) {
  if (c.rows() == 0) {
    return Matrix::Zero(a.rows(), 0);
  }
  const Innovation inn = factor_innovation(p, c, r);
  // K^T = S^{-1} C P A^T
  const Matrix kt = inn.llt.solve(inn.pct.transpose() * a.transpose());
  return kt.transpose();
}

FilterState kf_step(const FilterState& fs, const Matrix& a, const Matrix& q, const Matrix& c,
                    const Matrix& r, const Vector& y) {
  const Eigen::Index n = fs.p.rows();
  if (a.rows() != n || a.cols() != n || q.rows() != n || q.cols() != n || fs.xhat.size() != n) {
    throw DimensionError("kf_step: A, Q, x_hat and P must share the state dimension");
  }
  FilterState next;
  next.k = fs.k + 1;
  if (c.rows() == 0) {
    next.xhat = a * fs.xhat;
    next.p = a * fs.p * a.transpose() + q;
  } else {
    if (y.size() != c.rows()) {
      throw DimensionError("kf_step: measurement stack has " + std::to_string(y.size()) +
                           " rows, observation matrix has " + std::to_string(c.rows()));
    }
    const Innovation inn = factor_innovation(fs.p, c, r);
    // Filter gain L = P C^T S^{-1}; predictor gain K = A L.
    const Matrix l = inn.llt.solve(inn.pct.transpose()).transpose();
    const Vector filtered = fs.xhat + l * (y - c * fs.xhat);
    const Matrix ikc = Matrix::Identity(n, n) - l * c;
    const Matrix p_filtered = ikc * fs.p * ikc.transpose() + l * r * l.transpose();
    next.xhat = a * filtered;
    next.p = a * p_filtered * a.transpose() + q;
  }
  next.p = (0.5 * (next.p + next.p.transpose())).eval();
  return next;
}

std::vector<StepRecord> run_filter(const PlantModel& plant, const Trajectory& traj,
                                   std::span<const DropoutRealization> dropouts) {
  const std::size_t horizon = traj.states.size();
  if (dropouts.size() != horizon || traj.measurements.size() != horizon) {
    throw DimensionError("run_filter: trajectory and dropouts must share the horizon");
  }
  std::vector<StepRecord> records;
  records.reserve(horizon);
  FilterState fs{plant.x0, plant.p0, 0};
  for (std::size_t k = 0; k < horizon; ++k) {
    const DropoutRealization& d = dropouts[k];
    StepRecord rec;
    rec.k = k;
    rec.trace_p = fs.p.trace();
    rec.theta = d.theta;
    rec.state = d.state;
    if (k > 0) {
      rec.prev_state = dropouts[k - 1].state;
    }
    records.push_back(std::move(rec));

    const Observation obs = assemble_observation(plant, d.theta, k);
    const Vector y = stack_received(traj.measurements[k], obs.received);
    fs = kf_step(fs, plant.a(k), plant.q(k), obs.c, obs.r, y);
  }
  return records;
}

std::vector<Matrix> covariance_sequence(const PlantModel& plant,
                                        std::span<const DropoutRealization> dropouts) {
  std::vector<Matrix> out;
  out.reserve(dropouts.size() + 1);
  FilterState fs{Vector::Zero(plant.n), plant.p0, 0};
  out.push_back(fs.p);
  for (std::size_t k = 0; k < dropouts.size(); ++k) {
    const Observation obs = assemble_observation(plant, dropouts[k].theta, k);
    const Vector y = Vector::Zero(obs.c.rows());
    fs = kf_step(fs, plant.a(k), plant.q(k), obs.c, obs.r, y);
    out.push_back(fs.p);
  }
  return out;
}

}  // namespace netkf
