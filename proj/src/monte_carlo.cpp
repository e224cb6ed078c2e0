#include "netkf/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace netkf {

std::vector<double> MonteCarloResult::mean_series() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    out.push_back(s.mean_trp);
  }
  return out;
}

TrialLog run_trial(const Scenario& scenario, const PlantSimulator& simulator, std::uint64_t trial,
                   std::size_t horizon, std::uint64_t seed) {
  TrialLog log;
  log.trial = trial;
  Rng rng = make_rng(seed, trial);
  const PlantModel& plant = simulator.model();

  const StatePath path = sample_state_path(scenario.chain, horizon, rng);
  const Trajectory traj = simulator.simulate(horizon, rng);

  log.steps.reserve(horizon);
  FilterState fs{plant.x0, plant.p0, 0};
  std::size_t prev_state = 0;
  for (std::size_t k = 0; k < horizon; ++k) {
    const std::size_t state = path.states[k];
    DropoutRealization d = sample_dropouts(scenario.topology, scenario.links, state, rng);
    StepRecord rec;
    rec.k = k;
    rec.trace_p = fs.p.trace();
    rec.state = state;
    if (k > 0) {
      rec.prev_state = prev_state;
    }
    const Observation obs = assemble_observation(plant, d.theta, k);
    rec.theta = std::move(d.theta);
    log.steps.push_back(std::move(rec));
    prev_state = state;
    try {
      const Vector y = stack_received(traj.measurements[k], obs.received);
      fs = kf_step(fs, plant.a(k), plant.q(k), obs.c, obs.r, y);
    } catch (const NumericalError& e) {
      log.aborted = true;
      log.error = "trial " + std::to_string(trial) + " step " + std::to_string(k) + ": " + e.what();
      break;
    }
    if (!std::isfinite(fs.p.trace())) {
      log.aborted = true;
      log.error = "trial " + std::to_string(trial) + " step " + std::to_string(k) +
                  ": covariance overflowed";
      break;
    }
  }
  return log;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) {
    return std::nan("");
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MonteCarloResult run_monte_carlo(const Scenario& scenario, const MonteCarloOptions& options) {
  if (options.trials < 1 || options.horizon < 1) {
    throw std::invalid_argument("run_monte_carlo: trials and horizon must be >= 1");
  }
  const PlantSimulator simulator(scenario.plant);
  std::vector<TrialLog> logs(options.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < options.trials; t = next++) {
      logs[t] = run_trial(scenario, simulator, t, options.horizon, options.seed);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, options.trials);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
  }

  MonteCarloResult result;
  for (const TrialLog& log : logs) {
    if (log.aborted) {
      ++result.aborted_trials;
      result.errors.push_back(log.error);
    }
  }
  result.steps.reserve(options.horizon);
  std::vector<double> values;
  values.reserve(options.trials);
  for (std::size_t k = 0; k < options.horizon; ++k) {
    values.clear();
    double sum = 0.0;
    for (const TrialLog& log : logs) {
      if (k < log.steps.size()) {
        values.push_back(log.steps[k].trace_p);
        sum += log.steps[k].trace_p;
      }
    }
    StepSummary s;
    s.k = k;
    s.trials_alive = values.size();
    if (!values.empty()) {
      s.mean_trp = sum / static_cast<double>(values.size());
      std::sort(values.begin(), values.end());
      s.q05 = quantile_sorted(values, 0.05);
      s.q50 = quantile_sorted(values, 0.50);
      s.q95 = quantile_sorted(values, 0.95);
    } else {
      s.mean_trp = s.q05 = s.q50 = s.q95 = std::nan("");
    }
    result.steps.push_back(s);
  }
  if (options.keep_logs) {
    result.logs = std::move(logs);
  }
  return result;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf, end);
}

void write_series_csv(std::ostream& out, const std::vector<StepSummary>& steps) {
  out << "k,mean_trP,q05,q50,q95,n_trials_alive\n";
  for (const auto& s : steps) {
    out << s.k << ',' << format_double(s.mean_trp) << ',' << format_double(s.q05) << ','
        << format_double(s.q50) << ',' << format_double(s.q95) << ',' << s.trials_alive << '\n';
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("series csv line " + std::to_string(line) + ": bad field '" +
                             std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<StepSummary> read_series_csv(std::istream& in) {
  std::vector<StepSummary> out;
  std::string line;
  if (!std::getline(in, line) || line != "k,mean_trP,q05,q50,q95,n_trials_alive") {
    throw std::runtime_error("series csv: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      throw std::runtime_error("series csv line " + std::to_string(line_no) +
                               ": expected 6 fields");
    }
    StepSummary s;
    s.k = parse_field<TimeIndex>(fields[0], line_no);
    s.mean_trp = parse_field<double>(fields[1], line_no);
    s.q05 = parse_field<double>(fields[2], line_no);
    s.q50 = parse_field<double>(fields[3], line_no);
    s.q95 = parse_field<double>(fields[4], line_no);
    s.trials_alive = parse_field<std::size_t>(fields[5], line_no);
    out.push_back(s);
  }
  return out;
}

}  // namespace netkf
