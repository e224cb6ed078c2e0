#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "netkf/filter.hpp"
#include "netkf/scenario.hpp"

namespace netkf {

/// Everything one trial produced. `steps` stops early if the trial aborted.
struct TrialLog {
  std::uint64_t trial = 0;
  std::vector<StepRecord> steps;
  bool aborted = false;
  std::string error;
};

/// Cross-trial statistics of tr P(k|k-1) at one time step.
struct StepSummary {
  TimeIndex k = 0;
  double mean_trp = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  std::size_t trials_alive = 0;
};

struct MonteCarloOptions {
  std::size_t trials = 1;
  std::size_t horizon = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool keep_logs = true;
};

struct MonteCarloResult {
  std::vector<StepSummary> steps;
  std::vector<TrialLog> logs;  // empty unless keep_logs
  std::size_t aborted_trials = 0;
  std::vector<std::string> errors;

  std::vector<double> mean_series() const;
};

/// One independent trial: plant trajectory, network-state path, dropouts and
/// filter, all drawn from the stream derive_seed(seed, trial).
TrialLog run_trial(const Scenario& scenario, const PlantSimulator& simulator, std::uint64_t trial,
                   std::size_t horizon, std::uint64_t seed);

/// Trials run on `workers` threads; results are merged in trial-index order so
/// the output does not depend on the worker count.
MonteCarloResult run_monte_carlo(const Scenario& scenario, const MonteCarloOptions& options);

/// Linear-interpolated sample quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Columns: k,mean_trP,q05,q50,q95,n_trials_alive. Doubles use the shortest
/// representation that parses back to the same value.
void write_series_csv(std::ostream& out, const std::vector<StepSummary>& steps);
std::vector<StepSummary> read_series_csv(std::istream& in);

std::string format_double(double v);

}  // namespace netkf
