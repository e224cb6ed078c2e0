#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "netkf/network.hpp"
#include "netkf/numerics.hpp"
#include "netkf/plant.hpp"

namespace netkf {

/// One-step predictor pair (x_hat(k|k-1), P(k|k-1)).
struct FilterState {
  Vector xhat;
  Matrix p;
  TimeIndex k = 0;
};

/// Predictor gain K = A P C^T (C P C^T + R)^{-1}; n x 0 when nothing was received.
Matrix kalman_gain(const Matrix& p, const Matrix& a, const Matrix& c, const Matrix& r);

/// x_hat(k+1|k) = A x_hat + K (y - C x_hat),
/// P(k+1|k)    = A P A^T + Q - K C P A^T.
///
/// The covariance is propagated through the Joseph-form measurement update
/// followed by the time update and symmetrized. With an empty observation the
/// update is skipped: P(k+1|k) = A P A^T + Q. Throws NumericalError when the
/// innovation covariance is not positive definite.
FilterState kf_step(const FilterState& fs, const Matrix& a, const Matrix& q, const Matrix& c,
                    const Matrix& r, const Vector& y);

struct StepRecord {
  TimeIndex k = 0;
  double trace_p = 0.0;  // V_k = tr P(k|k-1)
  std::vector<std::uint8_t> theta;
  std::optional<std::size_t> prev_state;  // Xi(k-1), absent at k = 0
  std::size_t state = 0;                  // Xi(k)
};

/// Runs the filter from (x0, P0) over a trajectory, feeding only the
/// measurements whose theta_m(k) = 1. Emits V_k for k = 0..horizon-1.
std::vector<StepRecord> run_filter(const PlantModel& plant, const Trajectory& traj,
                                   std::span<const DropoutRealization> dropouts);

/// Covariance-only recursion (the Riccati part of run_filter); returns
/// P(k|k-1) for k = 0..dropouts.size().
std::vector<Matrix> covariance_sequence(const PlantModel& plant,
                                        std::span<const DropoutRealization> dropouts);

}  // namespace netkf
