#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "netkf/numerics.hpp"
#include "netkf/rng.hpp"

namespace netkf {

/// One sensor S_m: y_m(k) = C_m x(k) + v_m(k), v_m(k) ~ N(0, R_m(k)).
struct SensorSpec {
  Matrix c;                          // l_m x n
  PeriodicSequence<Matrix> r_table;  // l_m x l_m, positive definite

  Eigen::Index rows() const { return c.rows(); }
};

/// x(k+1) = A(k) x(k) + w(k), w(k) ~ N(0, Q(k)); x(0) ~ N(x0, P0).
struct PlantModel {
  Eigen::Index n = 0;
  PeriodicSequence<Matrix> a_table;
  PeriodicSequence<Matrix> q_table;
  std::vector<SensorSpec> sensors;
  Vector x0;
  Matrix p0;

  const Matrix& a(TimeIndex k) const { return a_table(k); }
  const Matrix& q(TimeIndex k) const { return q_table(k); }
  std::size_t sensor_count() const noexcept { return sensors.size(); }
};

struct Violation {
  std::string field;
  std::string message;
};

/// Checks dimensions, finiteness, PSD of Q(k) and P0 and PD of R_m(k).
/// An empty result means the model is valid.
std::vector<Violation> validate_model(const PlantModel& plant);

/// Throws ModelError listing every violation, if any.
void require_valid(const PlantModel& plant);

Matrix transition_matrix(const PlantModel& plant, TimeIndex ell, TimeIndex k);

struct Trajectory {
  std::vector<Vector> states;                     // x(0) .. x(horizon-1)
  std::vector<std::vector<Vector>> measurements;  // [k][m] = y_m(k)
};

/// Square-root factor L with L L^T = S for symmetric PSD S (eigen-based, so
/// singular covariances are allowed).
Matrix psd_factor(const Matrix& s);

/// Gaussian sampler for a validated plant. Factors of Q(k), R_m(k) and P0 are
/// computed once here and reused by every trajectory.
class PlantSimulator {
 public:
  explicit PlantSimulator(PlantModel plant);

  const PlantModel& model() const noexcept { return plant_; }

  Trajectory simulate(std::size_t horizon, Rng& rng) const;

 private:
  PlantModel plant_;
  Matrix p0_factor_;
  std::vector<Matrix> q_factors_;
  std::vector<std::vector<Matrix>> r_factors_;
};

Trajectory simulate_plant(const PlantModel& plant, std::size_t horizon, Rng& rng);

}  // namespace netkf
