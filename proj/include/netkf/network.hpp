#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "netkf/numerics.hpp"
#include "netkf/plant.hpp"
#include "netkf/rng.hpp"

namespace netkf {

// Node ids: 0 is the gateway S_0, sensors are 1..M. Edge E_m = (S_m, parent(S_m))
// shares the id of its sending sensor. Per-sensor vectors (gamma, theta, phi rows)
// are stored 0-based, so entry m-1 belongs to S_m. Network states are 0-based.

/// Directed tree rooted at the gateway.
class Topology {
 public:
  /// parents[m-1] = parent node id of S_m.
  explicit Topology(std::vector<std::size_t> parents);

  /// Every sensor reports straight to the gateway.
  static Topology star(std::size_t sensor_count);

  std::size_t sensor_count() const noexcept { return parents_.size(); }
  std::size_t parent(std::size_t sensor) const { return parents_.at(sensor - 1); }
  const std::vector<std::size_t>& parents() const noexcept { return parents_; }

  /// edge(path(S_m)) as sensor ids, starting with E_m and ending at the gateway edge.
  const std::vector<std::size_t>& path_edges(std::size_t sensor) const {
    return paths_.at(sensor - 1);
  }

  /// theta_m = product of gamma over edge(path(S_m)).
  std::vector<std::uint8_t> theta_from_gamma(std::span<const std::uint8_t> gamma) const;

  /// Bit-packed variant: bit m-1 of gamma_mask is gamma_m.
  std::uint64_t theta_mask(std::uint64_t gamma_mask) const;

 private:
  std::vector<std::size_t> parents_;
  std::vector<std::vector<std::size_t>> paths_;
  std::vector<std::uint64_t> path_masks_;
};

struct MarkovNetworkChain {
  Matrix transition;  // p_ij
  Vector initial;     // distribution of Xi(0)

  std::size_t state_count() const { return static_cast<std::size_t>(transition.rows()); }
};

/// psi(delta) over the finite support {1, ..., pmf.size()}.
class HoldingTimeDistribution {
 public:
  HoldingTimeDistribution() = default;
  explicit HoldingTimeDistribution(std::vector<double> pmf);

  static HoldingTimeDistribution point_mass(std::size_t delta);
  static HoldingTimeDistribution uniform(std::size_t lo, std::size_t hi);

  double operator()(std::size_t delta) const {
    return (delta >= 1 && delta <= pmf_.size()) ? pmf_[delta - 1] : 0.0;
  }
  std::size_t max_support() const noexcept { return pmf_.size(); }
  const std::vector<double>& pmf() const noexcept { return pmf_; }

 private:
  std::vector<double> pmf_;
};

struct SemiMarkovNetworkChain {
  Matrix embedded;  // q_ij
  std::vector<HoldingTimeDistribution> holding;
  Vector initial;

  std::size_t state_count() const { return static_cast<std::size_t>(embedded.rows()); }
  /// sigma = max_i max support of psi_i.
  std::size_t sigma() const;
};

using NetworkChain = std::variant<MarkovNetworkChain, SemiMarkovNetworkChain>;

std::size_t state_count(const NetworkChain& chain);

std::vector<Violation> validate_chain(const MarkovNetworkChain& chain,
                                      const std::string& field = "chain");
std::vector<Violation> validate_chain(const SemiMarkovNetworkChain& chain,
                                      const std::string& field = "chain");

/// The Markov chain as a semi-Markov chain with psi_j(1) = 1 and Q = P.
SemiMarkovNetworkChain as_semi_markov(const MarkovNetworkChain& chain);

struct StatePath {
  std::vector<std::size_t> states;  // Xi(0) .. Xi(horizon-1)
  std::vector<TimeIndex> renewals;  // renewal instants k_l inside the horizon (k_0 = 0)
};

StatePath sample_state_path(const MarkovNetworkChain& chain, std::size_t horizon, Rng& rng);

/// Renewal sampling: in state i at k_l, Delta_l ~ psi_i and Xi(k_{l+1}) ~ q_i. jointly
/// with weight q_ij psi_i(delta); virtual transitions (j == i) are kept as renewals.
StatePath sample_state_path(const SemiMarkovNetworkChain& chain, std::size_t horizon, Rng& rng);

StatePath sample_state_path(const NetworkChain& chain, std::size_t horizon, Rng& rng);

// ---------------------------------------------------------------------------
// Link model: channel gain h_m given the network state, power/bit-rate
// policies, and the success function f_m(h u, b).

struct PointMassGain {
  double value;
};
/// Rayleigh fading: the power gain is exponential with the given mean.
struct ExponentialGain {
  double mean;
};
/// ln h ~ N(mu, sigma^2).
struct LogNormalGain {
  double mu;
  double sigma;
};
struct DiscreteGain {
  std::vector<double> values;
  std::vector<double> probs;
};
using GainDistribution = std::variant<PointMassGain, ExponentialGain, LogNormalGain, DiscreteGain>;

double sample_gain(const GainDistribution& dist, Rng& rng);

/// Noncoherent-FSK bit success wrapped over b bits: (1 - exp(-x / (2 N0)) / 2)^b.
struct FskSuccess {
  double noise_density;
};
/// (1 - exp(-x / scale))^b.
struct ExpSnrSuccess {
  double scale;
};
/// User table: rows are bit rates, columns are received-power grid points.
/// Linear in x between grid points, clamped outside; for b off-grid the next
/// larger tabulated rate is used (last row beyond the grid).
struct TableSuccess {
  std::vector<double> x_grid;
  std::vector<double> b_grid;
  Matrix values;  // values(bi, xi)
};

struct SuccessFunction {
  std::variant<FskSuccess, ExpSnrSuccess, TableSuccess> form;
  /// Retransmission budget L; the link succeeds if any of L attempts does.
  unsigned attempts = 1;

  double operator()(double received_power, double bits) const;
};

struct ConstantPower {
  double u;
};
/// u = clamp(gain_k / h, u_min, u_max); u_max when h == 0.
struct SaturatedInversePower {
  double gain_k;
  double u_min;
  double u_max;
};
struct PerStatePower {
  std::vector<double> u;
};
using PowerPolicy = std::variant<ConstantPower, SaturatedInversePower, PerStatePower>;

struct ConstantRate {
  double b;
};
struct PerStateRate {
  std::vector<double> b;
};
using RatePolicy = std::variant<ConstantRate, PerStateRate>;

double apply_power(const PowerPolicy& policy, std::size_t state, double gain);
double apply_rate(const RatePolicy& policy, std::size_t state, double gain);

/// Full channel description of one edge E_m.
struct PhysicalLink {
  std::vector<GainDistribution> gain_by_state;
  SuccessFunction success;
  PowerPolicy power = ConstantPower{1.0};
  RatePolicy rate = ConstantRate{1.0};

  /// f_m(h kappa(j, h), eta(j, h)) for one realized gain.
  double success_given_gain(std::size_t state, double gain) const;
};

/// Edge characterized only by phi_{m|j}.
struct DirectLink {
  std::vector<double> phi_by_state;
};

using LinkModel = std::variant<PhysicalLink, DirectLink>;

std::vector<Violation> validate_link(const LinkModel& link, std::size_t state_count,
                                     const std::string& field = "link");

/// phi_{m|j} = E{ f_m(h kappa, eta) | Xi = j }. Deterministic: adaptive
/// Gauss-Legendre for continuous gains, exact sums for discrete ones.
double link_success_prob(const LinkModel& link, std::size_t state);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Plain Monte Carlo estimate of phi_{m|j} from `samples` gain draws.
Estimate link_success_prob_mc(const LinkModel& link, std::size_t state, std::size_t samples,
                              Rng& rng);

/// phi(m-1, j) = phi_{m|j}; M x |B|.
using PhiTable = Matrix;

PhiTable phi_table(std::span<const LinkModel> links, std::size_t state_count);

/// Pr{theta_m = 1 | Xi = j} = product of phi_{i|j} over edge(path(S_m)).
double path_success_prob(const Topology& topology, const PhiTable& phi, std::size_t sensor,
                         std::size_t state);

struct DropoutRealization {
  std::vector<std::uint8_t> gamma;
  std::vector<std::uint8_t> theta;
  std::size_t state = 0;
};

/// Draws every h_m from its state-j law, applies the policies, draws gamma_m,
/// and derives theta from the tree.
DropoutRealization sample_dropouts(const Topology& topology, std::span<const LinkModel> links,
                                   std::size_t state, Rng& rng);

/// Same, with gamma_m ~ Bernoulli(phi_{m|j}) drawn from a precomputed table.
DropoutRealization sample_dropouts(const Topology& topology, const PhiTable& phi,
                                   std::size_t state, Rng& rng);

/// Stochastic observation matrix for one step, in both layouts.
struct Observation {
  Matrix stacked_c;  // theta_1 C_1; ...; theta_M C_M (zero rows kept)
  Matrix stacked_r;  // diag(R_1(k), ..., R_M(k))
  Matrix c;          // received sensors' rows only
  Matrix r;          // matching block-diagonal R
  std::vector<std::size_t> received;  // 0-based sensor indices with theta = 1

  bool empty() const noexcept { return received.empty(); }
};

Observation assemble_observation(const PlantModel& plant, std::span<const std::uint8_t> theta,
                                 TimeIndex k);

/// Stack of y_m(k) over the received sensors, in the order of `received`.
Vector stack_received(std::span<const Vector> measurements,
                      std::span<const std::size_t> received);

}  // namespace netkf
