#include "netkf/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace netkf {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_phi(const PhiTable& phi, std::size_t sensors, std::size_t states) {
  if (static_cast<std::size_t>(phi.rows()) != sensors ||
      static_cast<std::size_t>(phi.cols()) != states) {
    throw DimensionError("phi table must be " + std::to_string(sensors) + " x " +
                         std::to_string(states) + ", got " + std::to_string(phi.rows()) + " x " +
                         std::to_string(phi.cols()));
  }
}

// Rows of C(k) restricted to the sensors set in theta_mask.
Matrix stacked_rows(const PlantModel& plant, std::uint64_t theta_mask) {
  Eigen::Index rows = 0;
  for (std::size_t m = 0; m < plant.sensors.size(); ++m) {
    if (theta_mask & (std::uint64_t{1} << m)) {
      rows += plant.sensors[m].rows();
    }
  }
  Matrix c(rows, plant.n);
  Eigen::Index offset = 0;
  for (std::size_t m = 0; m < plant.sensors.size(); ++m) {
    if (theta_mask & (std::uint64_t{1} << m)) {
      c.middleRows(offset, plant.sensors[m].rows()) = plant.sensors[m].c;
      offset += plant.sensors[m].rows();
    }
  }
  return c;
}

// Theta-pattern distribution for one time step: each distinct theta mask with
// its probability under every network state.
struct ThetaOutcome {
  std::uint64_t theta = 0;
  std::vector<double> weight;  // per state
};

std::vector<ThetaOutcome> theta_outcomes(const Topology& topology, const PhiTable& phi) {
  const std::size_t m_count = topology.sensor_count();
  const std::size_t states = static_cast<std::size_t>(phi.cols());
  std::vector<ThetaOutcome> out;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (std::uint64_t gamma = 0; gamma < (std::uint64_t{1} << m_count); ++gamma) {
    const std::uint64_t theta = topology.theta_mask(gamma);
    auto [it, inserted] = slot.emplace(theta, out.size());
    if (inserted) {
      out.push_back({theta, std::vector<double>(states, 0.0)});
    }
    for (std::size_t j = 0; j < states; ++j) {
      out[it->second].weight[j] += pattern_probability(gamma, phi, j);
    }
  }
  return out;
}

struct Enumerator {
  const PlantModel& plant;
  const std::vector<ThetaOutcome>& outcomes;
  std::vector<std::vector<Matrix>> blocks;  // blocks[t][m] = C_m Phi(k0 + t, k0)
  std::size_t delta;
  RankTolerance tol;
  std::vector<double> deficient;

  void run(std::size_t t, const Matrix& rows, const std::vector<double>& prefix) {
    if (rows.rows() >= plant.n && numerical_rank(rows, tol) == static_cast<std::size_t>(plant.n)) {
      return;
    }
    if (t == delta) {
      for (std::size_t j = 0; j < prefix.size(); ++j) {
        deficient[j] += prefix[j];
      }
      return;
    }
    std::vector<double> next(prefix.size());
    for (const ThetaOutcome& o : outcomes) {
      bool any = false;
      for (std::size_t j = 0; j < prefix.size(); ++j) {
        next[j] = prefix[j] * o.weight[j];
        any = any || next[j] != 0.0;
      }
      if (!any) {
        continue;
      }
      Eigen::Index extra = 0;
      for (std::size_t m = 0; m < plant.sensors.size(); ++m) {
        if (o.theta & (std::uint64_t{1} << m)) {
          extra += plant.sensors[m].rows();
        }
      }
      Matrix grown(rows.rows() + extra, plant.n);
      grown.topRows(rows.rows()) = rows;
      Eigen::Index offset = rows.rows();
      for (std::size_t m = 0; m < plant.sensors.size(); ++m) {
        if (o.theta & (std::uint64_t{1} << m)) {
          grown.middleRows(offset, blocks[t][m].rows()) = blocks[t][m];
          offset += blocks[t][m].rows();
        }
      }
      run(t + 1, grown, next);
    }
  }
};

double norm_sq(const Matrix& m) {
  const double s = spectral_norm(m);
  return s * s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

bool RankSuccessSet::contains(std::uint64_t gamma_mask) const {
  return std::binary_search(patterns.begin(), patterns.end(), gamma_mask);
}

RankSuccessSet rank_success_set(const PlantModel& plant, const Topology& topology,
                                RankTolerance tol) {
  const std::size_t m_count = topology.sensor_count();
  if (m_count != plant.sensors.size()) {
    throw DimensionError("rank_success_set: topology and plant disagree on the sensor count");
  }
  if (m_count > kMaxExactBits) {
    throw std::invalid_argument("rank_success_set: M = " + std::to_string(m_count) +
                                " exceeds the exact enumeration cap of " +
                                std::to_string(kMaxExactBits) +
                                "; use nu_monte_carlo instead");
  }
  RankSuccessSet set;
  set.sensor_count = m_count;
  set.state_dim = plant.n;
  set.tolerance = tol;
  std::unordered_map<std::uint64_t, bool> full_rank;
  for (std::uint64_t gamma = 0; gamma < (std::uint64_t{1} << m_count); ++gamma) {
    const std::uint64_t theta = topology.theta_mask(gamma);
    auto it = full_rank.find(theta);
    if (it == full_rank.end()) {
      it = full_rank.emplace(theta, has_full_column_rank(stacked_rows(plant, theta), tol)).first;
    }
    if (it->second) {
      set.patterns.push_back(gamma);
    }
  }
  return set;
}

double pattern_probability(std::uint64_t gamma_mask, const PhiTable& phi, std::size_t state) {
  double p = 1.0;
  for (Eigen::Index m = 0; m < phi.rows(); ++m) {
    const double s = phi(m, idx(state));
    p *= (gamma_mask & (std::uint64_t{1} << m)) ? s : 1.0 - s;
  }
  return p;
}

double full_rank_probability(const RankSuccessSet& set, const PhiTable& phi, std::size_t state) {
  double p = 0.0;
  for (std::uint64_t gamma : set.patterns) {
    p += pattern_probability(gamma, phi, state);
  }
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> nu(const RankSuccessSet& set, const MarkovNetworkChain& chain,
                       const PhiTable& phi) {
  const std::size_t states = chain.state_count();
  check_phi(phi, set.sensor_count, states);
  std::vector<double> deficient(states);
  for (std::size_t j = 0; j < states; ++j) {
    deficient[j] = 1.0 - full_rank_probability(set, phi, j);
  }
  std::vector<double> out(states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    for (std::size_t j = 0; j < states; ++j) {
      out[i] += chain.transition(idx(i), idx(j)) * deficient[j];
    }
    out[i] = std::clamp(out[i], 0.0, 1.0);
  }
  return out;
}

Deficiency deficiency_exact(const PlantModel& plant, const Topology& topology, const PhiTable& phi,
                            TimeIndex k0, std::size_t delta, RankTolerance tol) {
  const std::size_t m_count = topology.sensor_count();
  if (delta < 1) {
    throw std::invalid_argument("holding time delta must be >= 1");
  }
  if (m_count * delta > kMaxExactBits) {
    throw std::invalid_argument("exact enumeration of " + std::to_string(m_count * delta) +
                                " link outcomes exceeds the cap of " +
                                std::to_string(kMaxExactBits));
  }
  if (m_count != plant.sensors.size() || static_cast<std::size_t>(phi.rows()) != m_count) {
    throw DimensionError("deficiency_exact: plant, topology and phi disagree on M");
  }
  const std::size_t states = static_cast<std::size_t>(phi.cols());
  const auto outcomes = theta_outcomes(topology, phi);

  Enumerator e{plant, outcomes, {}, delta, tol, std::vector<double>(states, 0.0)};
  Matrix transition = Matrix::Identity(plant.n, plant.n);
  for (std::size_t t = 0; t < delta; ++t) {
    if (t > 0) {
      transition = propagate(plant.a_table, k0 + t, k0 + t - 1, std::move(transition));
    }
    std::vector<Matrix> row;
    for (const auto& s : plant.sensors) {
      row.push_back(s.c * transition);
    }
    e.blocks.push_back(std::move(row));
  }
  e.run(0, Matrix(0, plant.n), std::vector<double>(states, 1.0));

  Deficiency d;
  d.value = e.deficient;
  for (double& v : d.value) {
    v = std::clamp(v, 0.0, 1.0);
  }
  d.std_error.assign(states, 0.0);
  d.exact = true;
  return d;
}

Deficiency deficiency_monte_carlo(const PlantModel& plant, const Topology& topology,
                                  const PhiTable& phi, TimeIndex k0, std::size_t delta,
                                  std::size_t samples, Rng& rng, RankTolerance tol) {
  const std::size_t m_count = topology.sensor_count();
  const std::size_t states = static_cast<std::size_t>(phi.cols());
  if (delta < 1) {
    throw std::invalid_argument("holding time delta must be >= 1");
  }
  if (m_count != plant.sensors.size() || static_cast<std::size_t>(phi.rows()) != m_count) {
    throw DimensionError("deficiency_monte_carlo: plant, topology and phi disagree on M");
  }
  const std::size_t per_state = std::max<std::size_t>(2, samples / std::max<std::size_t>(1, states));
  const bool memo_ok = m_count * delta <= 64;
  std::unordered_map<std::uint64_t, bool> memo;

  Deficiency d;
  d.exact = false;
  d.value.assign(states, 0.0);
  d.std_error.assign(states, 0.0);
  std::vector<std::uint8_t> gamma(m_count);
  std::vector<std::vector<std::uint8_t>> thetas(delta);
  for (std::size_t j = 0; j < states; ++j) {
    std::size_t failures = 0;
    for (std::size_t s = 0; s < per_state; ++s) {
      std::uint64_t key = 0;
      for (std::size_t t = 0; t < delta; ++t) {
        for (std::size_t m = 0; m < m_count; ++m) {
          gamma[m] = bernoulli(rng, phi(idx(m), idx(j))) ? 1 : 0;
        }
        thetas[t] = topology.theta_from_gamma(gamma);
        if (memo_ok) {
          for (std::size_t m = 0; m < m_count; ++m) {
            if (thetas[t][m]) {
              key |= std::uint64_t{1} << (t * m_count + m);
            }
          }
        }
      }
      bool full = false;
      const auto hit = memo_ok ? memo.find(key) : memo.end();
      if (hit != memo.end()) {
        full = hit->second;
      } else {
        std::vector<Matrix> c_rows;
        c_rows.reserve(delta);
        for (std::size_t t = 0; t < delta; ++t) {
          c_rows.push_back(assemble_observation(plant, thetas[t], k0 + t).stacked_c);
        }
        const Matrix o = observability_matrix(plant.a_table, c_rows, k0, delta - 1);
        full = numerical_rank(o, tol) == static_cast<std::size_t>(plant.n);
        if (memo_ok) {
          memo.emplace(key, full);
        }
      }
      if (!full) {
        ++failures;
      }
    }
    const double n = static_cast<double>(per_state);
    const double p = static_cast<double>(failures) / n;
    d.value[j] = p;
    d.std_error[j] = std::sqrt(p * (1.0 - p) / n);
  }
  return d;
}

StateEstimates nu_monte_carlo(const PlantModel& plant, const Topology& topology,
                              const MarkovNetworkChain& chain, const PhiTable& phi,
                              std::size_t samples, Rng& rng, RankTolerance tol) {
  const std::size_t states = chain.state_count();
  check_phi(phi, topology.sensor_count(), states);
  const Deficiency d = deficiency_monte_carlo(plant, topology, phi, 0, 1, samples, rng, tol);
  StateEstimates out;
  out.value.assign(states, 0.0);
  out.std_error.assign(states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    double var = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      const double p = chain.transition(idx(i), idx(j));
      out.value[i] += p * d.value[j];
      var += p * p * d.std_error[j] * d.std_error[j];
    }
    out.std_error[i] = std::sqrt(var);
  }
  return out;
}

MuResult mu(const PlantModel& plant, const Topology& topology, const SemiMarkovNetworkChain& chain,
            const PhiTable& phi, TimeIndex k0, std::size_t delta,
            const CertificateOptions& options) {
  const std::size_t states = chain.state_count();
  check_phi(phi, topology.sensor_count(), states);
  if (delta < 1) {
    throw std::invalid_argument("mu: holding time delta must be >= 1");
  }
  MuResult r;
  if (topology.sensor_count() * delta <= kMaxExactBits) {
    r.deficiency = deficiency_exact(plant, topology, phi, k0, delta, options.tolerance);
  } else {
    Rng rng = make_rng(options.mc_seed, (k0 << 20) ^ delta);
    r.deficiency = deficiency_monte_carlo(plant, topology, phi, k0, delta, options.mc_samples, rng,
                                          options.tolerance);
  }
  r.mu.assign(states, 0.0);
  r.std_error.assign(states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    double var = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      const double q = chain.embedded(idx(i), idx(j));
      r.mu[i] += q * r.deficiency.value[j];
      var += q * q * r.deficiency.std_error[j] * r.deficiency.std_error[j];
    }
    r.mu[i] = std::clamp(r.mu[i], 0.0, 1.0);
    r.std_error[i] = std::sqrt(var);
  }
  return r;
}

namespace {

void finish_report(StabilityReport& rep) {
  rep.lhs = 0.0;
  rep.lhs_std_error = 0.0;
  bool first = true;
  for (const LhsEntry& e : rep.lhs_table) {
    if (first || e.lhs > rep.lhs) {
      rep.lhs = e.lhs;
      rep.lhs_std_error = e.std_error;
      rep.argmax_state = e.state;
      rep.argmax_time = e.k0;
      first = false;
    }
  }
  rep.required_bound = 1.0;
  rep.margin = 1.0 - rep.lhs;
  rep.certified = rep.lhs < 1.0;
  rep.rho = rep.sigma <= 1 ? rep.lhs : std::pow(rep.lhs, 1.0 / static_cast<double>(rep.sigma));
  rep.notes.push_back("rank decisions use relative singular-value threshold " +
                      fmt(rep.rank_tolerance));
  rep.notes.push_back(
      "max over time is taken over one period of the A table, which upper-bounds the max over "
      "any realized set of renewal instants");
}

}  // namespace

StabilityReport check_theorem1(const PlantModel& plant, const Topology& topology,
                               const MarkovNetworkChain& chain, const PhiTable& phi,
                               const CertificateOptions& options) {
  const std::size_t states = chain.state_count();
  check_phi(phi, topology.sensor_count(), states);
  StabilityReport rep;
  rep.certificate = "theorem1";
  rep.state_count = states;
  rep.sigma = 1;
  rep.period = plant.a_table.period();
  rep.rank_tolerance = options.tolerance.value();
  std::vector<double> nu_se(states, 0.0);
  if (topology.sensor_count() <= kMaxExactBits) {
    rep.nu = nu(rank_success_set(plant, topology, options.tolerance), chain, phi);
    rep.method = "exact";
  } else {
    Rng rng = make_rng(options.mc_seed, 0);
    const StateEstimates est =
        nu_monte_carlo(plant, topology, chain, phi, options.mc_samples, rng, options.tolerance);
    rep.nu = est.value;
    nu_se = est.std_error;
    rep.method = "monte_carlo";
  }
  for (TimeIndex k = 0; k < rep.period; ++k) {
    const double a2 = norm_sq(plant.a(k));
    rep.max_transition_norm_sq.push_back(a2);
    for (std::size_t i = 0; i < states; ++i) {
      rep.lhs_table.push_back({i, k, rep.nu[i] * a2, nu_se[i] * a2});
    }
  }
  finish_report(rep);
  return rep;
}

StabilityReport check_theorem2(const PlantModel& plant, const Topology& topology,
                               const SemiMarkovNetworkChain& chain, const PhiTable& phi,
                               const CertificateOptions& options) {
  const std::size_t states = chain.state_count();
  check_phi(phi, topology.sensor_count(), states);
  const std::size_t sigma = chain.sigma();
  if (sigma < 1) {
    throw ModelError("check_theorem2: holding times need a finite support bound sigma >= 1");
  }
  StabilityReport rep;
  rep.certificate = "theorem2";
  rep.state_count = states;
  rep.sigma = sigma;
  rep.period = plant.a_table.period();
  rep.rank_tolerance = options.tolerance.value();
  bool any_exact = false;
  bool any_mc = false;
  rep.mu.assign(rep.period, {});
  rep.mu_std_error.assign(rep.period, {});
  for (TimeIndex k0 = 0; k0 < rep.period; ++k0) {
    std::vector<double> lhs(states, 0.0);
    std::vector<double> var(states, 0.0);
    Matrix transition = Matrix::Identity(plant.n, plant.n);
    for (std::size_t delta = 1; delta <= sigma; ++delta) {
      transition = propagate(plant.a_table, k0 + delta, k0 + delta - 1, std::move(transition));
      const double phi_sq = norm_sq(transition);
      // Pr{Delta = delta | Xi(k_l - 1) = i} = sum_j psi_j(delta) q_ij.
      std::vector<double> weight(states, 0.0);
      bool needed = false;
      for (std::size_t i = 0; i < states; ++i) {
        for (std::size_t j = 0; j < states; ++j) {
          weight[i] += chain.holding[j](delta) * chain.embedded(idx(i), idx(j));
        }
        needed = needed || weight[i] > 0.0;
      }
      if (!needed) {
        rep.mu[k0].push_back(std::vector<double>(states, 0.0));
        rep.mu_std_error[k0].push_back(std::vector<double>(states, 0.0));
        continue;
      }
      const MuResult m = mu(plant, topology, chain, phi, k0, delta, options);
      (m.deficiency.exact ? any_exact : any_mc) = true;
      for (std::size_t i = 0; i < states; ++i) {
        lhs[i] += m.mu[i] * weight[i] * phi_sq;
        var[i] += std::pow(m.std_error[i] * weight[i] * phi_sq, 2);
      }
      rep.mu[k0].push_back(m.mu);
      rep.mu_std_error[k0].push_back(m.std_error);
    }
    for (std::size_t i = 0; i < states; ++i) {
      rep.lhs_table.push_back({i, k0, lhs[i], std::sqrt(var[i])});
    }
  }
  rep.method = any_mc ? (any_exact ? "mixed" : "monte_carlo") : "exact";
  finish_report(rep);
  rep.notes.push_back(
      "psi convention: a sojourn in state s lasts Delta ~ psi_s. The sampler draws (next state j, "
      "Delta) with weight q_ij psi_i(delta) for the current state i; the certificate weights delta "
      "by sum_j psi_j(delta) q_ij over the state j entered from the previous state i");
  return rep;
}

StabilityReport check_corollary1(const PlantModel& plant, const MarkovNetworkChain& chain,
                                 const PhiTable& phi, const CertificateOptions& options) {
  if (plant.sensors.size() != 1) {
    throw PreconditionError("corollary1 requires exactly one sensor (M = 1)");
  }
  for (const Matrix& a : plant.a_table.table()) {
    if (a != plant.a_table.table().front()) {
      throw PreconditionError("corollary1 requires an LTI plant (constant A)");
    }
  }
  if (!has_full_column_rank(plant.sensors[0].c, options.tolerance)) {
    throw PreconditionError("corollary1 requires C_1 to have full column rank");
  }
  const std::size_t states = chain.state_count();
  check_phi(phi, 1, states);
  StabilityReport rep;
  rep.certificate = "corollary1";
  rep.state_count = states;
  rep.sigma = 1;
  rep.period = 1;
  rep.rank_tolerance = options.tolerance.value();
  rep.method = "exact";
  const double a2 = norm_sq(plant.a(0));
  rep.max_transition_norm_sq.push_back(a2);
  rep.nu.assign(states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    for (std::size_t j = 0; j < states; ++j) {
      rep.nu[i] += chain.transition(idx(i), idx(j)) * (1.0 - phi(0, idx(j)));
    }
    rep.lhs_table.push_back({i, 0, a2 * rep.nu[i], 0.0});
  }
  finish_report(rep);
  return rep;
}

std::string to_text(const StabilityReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "certificate: " << r.certificate << "\n";
  os << "states: " << r.state_count << "\n";
  os << "sigma: " << r.sigma << "\n";
  os << "a_period: " << r.period << "\n";
  os << "method: " << r.method << "\n";
  os << "rank_tolerance: " << r.rank_tolerance << "\n";
  os << "lhs: " << r.lhs << "\n";
  if (r.method != "exact") {
    os << "lhs_std_error: " << r.lhs_std_error << "\n";
  }
  os << "argmax_state: " << (r.argmax_state + 1) << "\n";
  os << "argmax_time: " << r.argmax_time << "\n";
  os << "required_bound: < " << r.required_bound << "\n";
  os << "rho: " << r.rho << "\n";
  os << "margin: " << r.margin << "\n";
  os << "verdict: " << (r.certified ? "certified" : "not-certified") << "\n";
  if (r.fitted) {
    os << "fitted_alpha: " << r.fitted->alpha << "\n";
    os << "fitted_beta: " << r.fitted->beta << "\n";
    os << "fitted_rho: " << r.fitted->rho << "\n";
  }
  os << "\n[lhs]\nstate,k0,lhs\n";
  for (const auto& e : r.lhs_table) {
    os << (e.state + 1) << "," << e.k0 << "," << e.lhs << "\n";
  }
  if (!r.nu.empty()) {
    os << "\n[nu]\nstate,nu\n";
    for (std::size_t i = 0; i < r.nu.size(); ++i) {
      os << (i + 1) << "," << r.nu[i] << "\n";
    }
  }
  if (!r.mu.empty()) {
    os << "\n[mu]\nk0,delta,state,mu\n";
    for (std::size_t k0 = 0; k0 < r.mu.size(); ++k0) {
      for (std::size_t d = 0; d < r.mu[k0].size(); ++d) {
        for (std::size_t i = 0; i < r.mu[k0][d].size(); ++i) {
          os << k0 << "," << (d + 1) << "," << (i + 1) << "," << r.mu[k0][d][i] << "\n";
        }
      }
    }
  }
  os << "\n[notes]\n";
  for (const auto& n : r.notes) {
    os << "- " << n << "\n";
  }
  return os.str();
}

std::string table_csv(const StabilityReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (!r.mu.empty()) {
    os << "k0,delta,state,mu,std_error\n";
    for (std::size_t k0 = 0; k0 < r.mu.size(); ++k0) {
      for (std::size_t d = 0; d < r.mu[k0].size(); ++d) {
        for (std::size_t i = 0; i < r.mu[k0][d].size(); ++i) {
          os << k0 << "," << (d + 1) << "," << (i + 1) << "," << r.mu[k0][d][i] << ","
             << r.mu_std_error[k0][d][i] << "\n";
        }
      }
    }
  } else {
    os << "state,nu\n";
    for (std::size_t i = 0; i < r.nu.size(); ++i) {
      os << (i + 1) << "," << r.nu[i] << "\n";
    }
  }
  return os.str();
}

}  // namespace netkf
