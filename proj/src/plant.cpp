#include "netkf/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace netkf {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kPsdTol = 1e-12;

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

enum class Definiteness { kSemi, kStrict };

// Appends violations for a covariance that must be square, symmetric and (semi)definite.
void check_covariance(const Matrix& s, Eigen::Index dim, const std::string& field,
                      Definiteness kind, std::vector<Violation>& out) {
  if (s.rows() != dim || s.cols() != dim) {
    out.push_back({field, "expected " + std::to_string(dim) + "x" + std::to_string(dim) +
                              ", got " + shape(s)});
    return;
  }
  if (!s.allFinite()) {
    out.push_back({field, "non-finite entries"});
    return;
  }
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    out.push_back({field, "not symmetric"});
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  std::ostringstream msg;
  if (kind == Definiteness::kSemi && min_eig < -kPsdTol * scale) {
    msg << "not positive semidefinite (min eigenvalue " << min_eig << ")";
    out.push_back({field, msg.str()});
  } else if (kind == Definiteness::kStrict && min_eig <= kPsdTol * scale) {
    msg << "not positive definite (min eigenvalue " << min_eig << ")";
    out.push_back({field, msg.str()});
  }
}

}  // namespace

std::vector<Violation> validate_model(const PlantModel& plant) {
  std::vector<Violation> out;
  const Eigen::Index n = plant.n;
  if (n < 1) {
    out.push_back({"plant.n", "state dimension must be >= 1"});
    return out;
  }
  if (plant.a_table.empty()) {
    out.push_back({"plant.A", "empty table"});
  }
  for (std::size_t i = 0; i < plant.a_table.period(); ++i) {
    const Matrix& a = plant.a_table.table()[i];
    if (a.rows() != n || a.cols() != n) {
      out.push_back({indexed("plant.A", i), "expected " + std::to_string(n) + "x" +
                                                std::to_string(n) + ", got " + shape(a)});
    } else if (!a.allFinite()) {
      out.push_back({indexed("plant.A", i), "non-finite entries"});
    }
  }
  if (plant.q_table.empty()) {
    out.push_back({"plant.Q", "empty table"});
  }
  for (std::size_t i = 0; i < plant.q_table.period(); ++i) {
    check_covariance(plant.q_table.table()[i], n, indexed("plant.Q", i), Definiteness::kSemi,
                     out);
  }
  if (plant.x0.size() != n) {
    out.push_back({"plant.x0", "expected length " + std::to_string(n) + ", got " +
                                   std::to_string(plant.x0.size())});
  } else if (!plant.x0.allFinite()) {
    out.push_back({"plant.x0", "non-finite entries"});
  }
  check_covariance(plant.p0, n, "plant.P0", Definiteness::kSemi, out);

  for (std::size_t m = 0; m < plant.sensors.size(); ++m) {
    const SensorSpec& s = plant.sensors[m];
    const std::string base = indexed("plant.sensors", m);
    if (s.c.rows() < 1 || s.c.cols() != n) {
      out.push_back({base + ".C", "expected l_m x " + std::to_string(n) + " with l_m >= 1, got " +
                                      shape(s.c)});
      continue;
    }
    if (!s.c.allFinite()) {
      out.push_back({base + ".C", "non-finite entries"});
    }
    if (s.r_table.empty()) {
      out.push_back({base + ".R", "empty table"});
    }
    for (std::size_t i = 0; i < s.r_table.period(); ++i) {
      check_covariance(s.r_table.table()[i], s.c.rows(), indexed(base + ".R", i),
                       Definiteness::kStrict, out);
    }
  }
  return out;
}

void require_valid(const PlantModel& plant) {
  const auto violations = validate_model(plant);
  if (violations.empty()) {
    return;
  }
  std::string msg = "invalid plant model:";
  for (const auto& v : violations) {
    msg += "\n  " + v.field + ": " + v.message;
  }
  throw ModelError(msg);
}

Matrix transition_matrix(const PlantModel& plant, TimeIndex ell, TimeIndex k) {
  return transition_matrix(plant.a_table, ell, k);
}

Matrix psd_factor(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

PlantSimulator::PlantSimulator(PlantModel plant) : plant_(std::move(plant)) {
  require_valid(plant_);
  p0_factor_ = psd_factor(plant_.p0);
  for (const Matrix& q : plant_.q_table.table()) {
    q_factors_.push_back(psd_factor(q));
  }
  for (const SensorSpec& s : plant_.sensors) {
    std::vector<Matrix> factors;
    for (const Matrix& r : s.r_table.table()) {
      factors.push_back(psd_factor(r));
    }
    r_factors_.push_back(std::move(factors));
  }
}

Trajectory PlantSimulator::simulate(std::size_t horizon, Rng& rng) const {
  if (horizon < 1) {
    throw std::invalid_argument("simulate_plant: horizon must be >= 1");
  }
  const Eigen::Index n = plant_.n;
  Trajectory traj;
  traj.states.reserve(horizon);
  traj.measurements.reserve(horizon);

  Vector z(n);
  fill_standard_normal(rng, z);
  Vector x = plant_.x0 + p0_factor_ * z;

  for (std::size_t k = 0; k < horizon; ++k) {
    std::vector<Vector> ys;
    ys.reserve(plant_.sensors.size());
    for (std::size_t m = 0; m < plant_.sensors.size(); ++m) {
      const SensorSpec& s = plant_.sensors[m];
      const auto& factors = r_factors_[m];
      Vector v(s.c.rows());
      fill_standard_normal(rng, v);
      ys.push_back(s.c * x + factors[k % factors.size()] * v);
    }
    traj.states.push_back(x);
    traj.measurements.push_back(std::move(ys));

    fill_standard_normal(rng, z);
    Vector next = plant_.a(k) * x + q_factors_[k % q_factors_.size()] * z;
    x = std::move(next);
  }
  return traj;
}

Trajectory simulate_plant(const PlantModel& plant, std::size_t horizon, Rng& rng) {
  return PlantSimulator(plant).simulate(horizon, rng);
}

}  // namespace netkf
