#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netkf/network.hpp"
#include "netkf/numerics.hpp"
#include "netkf/plant.hpp"
#include "netkf/rng.hpp"

namespace netkf {

/// Exact enumeration is used while the number of enumerated link outcomes
/// (M for C(k), M * delta for the holding-interval observability matrix)
/// stays at or below this many bits.
inline constexpr std::size_t kMaxExactBits = 20;

/// The set J of gamma-patterns for which C(k) has full column rank.
struct RankSuccessSet {
  std::size_t sensor_count = 0;
  Eigen::Index state_dim = 0;
  std::vector<std::uint64_t> patterns;  // bit m-1 = gamma_m, ascending
  RankTolerance tolerance;

  bool contains(std::uint64_t gamma_mask) const;
};

/// Enumerates all 2^M gamma-patterns. Throws std::invalid_argument for M > 20.
RankSuccessSet rank_success_set(const PlantModel& plant, const Topology& topology,
                                RankTolerance tol = RankTolerance{});

/// Probability of one gamma-pattern given state j (links independent given j).
double pattern_probability(std::uint64_t gamma_mask, const PhiTable& phi, std::size_t state);

/// Pr{r = 1 | Xi = j} = sum over J of prod phi^gamma (1 - phi)^(1 - gamma).
double full_rank_probability(const RankSuccessSet& set, const PhiTable& phi, std::size_t state);

/// nu_i = sum_j p_ij Pr{r = 0 | Xi = j}.
std::vector<double> nu(const RankSuccessSet& set, const MarkovNetworkChain& chain,
                       const PhiTable& phi);

/// Pr{rank deficiency | Xi = j, Delta = delta} per state j, with the state held
/// constant over [k0, k0 + delta - 1].
struct Deficiency {
  std::vector<double> value;
  std::vector<double> std_error;  // zeros for exact enumeration
  bool exact = true;
};

/// Exact enumeration with pruning once the stacked rows reach full column rank.
/// Throws std::invalid_argument when M * delta exceeds kMaxExactBits.
Deficiency deficiency_exact(const PlantModel& plant, const Topology& topology, const PhiTable& phi,
                            TimeIndex k0, std::size_t delta, RankTolerance tol = RankTolerance{});

/// Stratified Monte Carlo: `samples` draws split evenly over the network states.
/// Each draw samples the dropout sequence, builds O(k0 + delta - 1, k0) and
/// tests its rank directly.
Deficiency deficiency_monte_carlo(const PlantModel& plant, const Topology& topology,
                                  const PhiTable& phi, TimeIndex k0, std::size_t delta,
                                  std::size_t samples, Rng& rng,
                                  RankTolerance tol = RankTolerance{});

struct StateEstimates {
  std::vector<double> value;
  std::vector<double> std_error;
};

/// nu_i by direct sampling of C(k); independent of the rank success set.
StateEstimates nu_monte_carlo(const PlantModel& plant, const Topology& topology,
                              const MarkovNetworkChain& chain, const PhiTable& phi,
                              std::size_t samples, Rng& rng, RankTolerance tol = RankTolerance{});

struct MuResult {
  std::vector<double> mu;  // mu_i(k0, delta) per previous state i
  std::vector<double> std_error;
  Deficiency deficiency;
};

/// Options shared by the certificate computations.
struct CertificateOptions {
  RankTolerance tolerance;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t mc_seed = 0x5eed;
};

/// mu_i(k0, delta) = sum_j q_ij Pr{rho = 0 | Xi = j, Delta = delta}. Exact when
/// M * delta <= 20, otherwise Monte Carlo with options.mc_samples draws.
MuResult mu(const PlantModel& plant, const Topology& topology, const SemiMarkovNetworkChain& chain,
            const PhiTable& phi, TimeIndex k0, std::size_t delta,
            const CertificateOptions& options = {});

struct LhsEntry {
  std::size_t state = 0;
  TimeIndex k0 = 0;
  double lhs = 0.0;
  double std_error = 0.0;
};

struct BoundConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

struct StabilityReport {
  std::string certificate;  // "theorem1", "theorem2", "corollary1"
  std::size_t state_count = 0;
  std::size_t sigma = 1;
  std::size_t period = 1;

  std::vector<double> nu;  // theorem1 and corollary1 certificates
  /// theorem2 certificate: mu[k0][delta - 1][i] and its standard error.
  std::vector<std::vector<std::vector<double>>> mu;
  std::vector<std::vector<std::vector<double>>> mu_std_error;
  std::vector<double> max_transition_norm_sq;  // per k0: ||A(k0)||^2 or per-delta max

  std::vector<LhsEntry> lhs_table;
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  std::size_t argmax_state = 0;
  TimeIndex argmax_time = 0;

  double required_bound = 1.0;  // LHS must stay strictly below this
  double rho = 0.0;             // LHS (theorem1) or LHS^(1/sigma) (theorem2)
  double margin = 0.0;          // 1 - LHS
  bool certified = false;

  std::string method;  // "exact", "monte_carlo" or "mixed"
  double rank_tolerance = RankTolerance::kDefault;
  std::vector<std::string> notes;
  std::optional<BoundConstants> fitted;
};

/// max over (i, k) of nu_i ||A(k)||^2, with k over one period of A.
StabilityReport check_theorem1(const PlantModel& plant, const Topology& topology,
                               const MarkovNetworkChain& chain, const PhiTable& phi,
                               const CertificateOptions& options = {});

/// max over (i, k0) of sum_delta mu_i(k0, delta) sum_j psi_j(delta) q_ij ||Phi(k0+delta, k0)||^2.
StabilityReport check_theorem2(const PlantModel& plant, const Topology& topology,
                               const SemiMarkovNetworkChain& chain, const PhiTable& phi,
                               const CertificateOptions& options = {});

/// One sensor, LTI plant, C_1 full column rank:
/// ||A||^2 max_i sum_j p_ij (1 - phi_{1|j}).
StabilityReport check_corollary1(const PlantModel& plant, const MarkovNetworkChain& chain,
                                 const PhiTable& phi, const CertificateOptions& options = {});

/// Key-value header plus tables.
std::string to_text(const StabilityReport& report);

/// nu table (state,nu) or mu table (k0,delta,state,mu,std_error) as CSV.
std::string table_csv(const StabilityReport& report);

}  // namespace netkf
