#include "netkf/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "netkf/quadrature.hpp"

namespace netkf {

namespace {

constexpr double kRowSumTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Rows of a stochastic matrix and an initial distribution.
void check_stochastic(const Matrix& p, const Vector& initial, const std::string& field,
                      const std::string& matrix_name, std::vector<Violation>& out) {
  if (p.rows() < 1 || p.rows() != p.cols()) {
    out.push_back({field + "." + matrix_name, "must be a nonempty square matrix"});
    return;
  }
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const std::string row = indexed(field + "." + matrix_name, static_cast<std::size_t>(i));
    bool entries_ok = true;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (!std::isfinite(p(i, j)) || p(i, j) < 0.0 || p(i, j) > 1.0) {
        out.push_back({row, "entry " + std::to_string(j) + " = " + num(p(i, j)) +
                                " outside [0, 1]"});
        entries_ok = false;
      }
    }
    const double sum = p.row(i).sum();
    if (entries_ok && std::abs(sum - 1.0) > kRowSumTol) {
      out.push_back({row, "row sums to " + num(sum) + ", expected 1"});
    }
  }
  if (initial.size() != p.rows()) {
    out.push_back({field + ".initial", "expected " + std::to_string(p.rows()) + " entries, got " +
                                           std::to_string(initial.size())});
  } else if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > kRowSumTol) {
    out.push_back({field + ".initial", "not a probability distribution (sum " +
                                           num(initial.sum()) + ")"});
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Topology

Topology::Topology(std::vector<std::size_t> parents) : parents_(std::move(parents)) {
  const std::size_t m_count = parents_.size();
  if (m_count == 0) {
    throw ModelError("topology.parent: at least one sensor is required");
  }
  if (m_count > 63) {
    throw ModelError("topology.parent: at most 63 sensors are supported");
  }
  paths_.resize(m_count);
  path_masks_.resize(m_count);
  for (std::size_t m = 1; m <= m_count; ++m) {
    std::vector<std::size_t> path;
    std::uint64_t mask = 0;
    std::size_t node = m;
    while (node != 0) {
      if (node > m_count) {
        throw ModelError("topology.parent[" + std::to_string(node - 1) + "]: unknown node id " +
                         std::to_string(node));
      }
      if (mask & (std::uint64_t{1} << (node - 1))) {
        throw ModelError("topology.parent: cycle through sensor " + std::to_string(node) +
                         "; the graph must be a tree rooted at the gateway");
      }
      path.push_back(node);
      mask |= std::uint64_t{1} << (node - 1);
      const std::size_t next = parents_[node - 1];
      if (next > m_count) {
        throw ModelError("topology.parent[" + std::to_string(node - 1) + "]: unknown node id " +
                         std::to_string(next));
      }
      node = next;
    }
    paths_[m - 1] = std::move(path);
    path_masks_[m - 1] = mask;
  }
}

Topology Topology::star(std::size_t sensor_count) {
  return Topology(std::vector<std::size_t>(sensor_count, 0));
}

std::vector<std::uint8_t> Topology::theta_from_gamma(std::span<const std::uint8_t> gamma) const {
  if (gamma.size() != sensor_count()) {
    throw DimensionError("theta_from_gamma: gamma has " + std::to_string(gamma.size()) +
                         " entries, expected " + std::to_string(sensor_count()));
  }
  std::vector<std::uint8_t> theta(sensor_count());
  for (std::size_t m = 0; m < sensor_count(); ++m) {
    std::uint8_t ok = 1;
    for (std::size_t edge : paths_[m]) {
      ok = static_cast<std::uint8_t>(ok & (gamma[edge - 1] ? 1 : 0));
    }
    theta[m] = ok;
  }
  return theta;
}

std::uint64_t Topology::theta_mask(std::uint64_t gamma_mask) const {
  std::uint64_t theta = 0;
  for (std::size_t m = 0; m < sensor_count(); ++m) {
    if ((gamma_mask & path_masks_[m]) == path_masks_[m]) {
      theta |= std::uint64_t{1} << m;
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Network-state chains

HoldingTimeDistribution::HoldingTimeDistribution(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  while (!pmf_.empty() && pmf_.back() == 0.0) {
    pmf_.pop_back();
  }
}

HoldingTimeDistribution HoldingTimeDistribution::point_mass(std::size_t delta) {
  if (delta < 1) {
    throw ModelError("holding time support must start at 1");
  }
  std::vector<double> pmf(delta, 0.0);
  pmf[delta - 1] = 1.0;
  return HoldingTimeDistribution(std::move(pmf));
}

HoldingTimeDistribution HoldingTimeDistribution::uniform(std::size_t lo, std::size_t hi) {
  if (lo < 1 || hi < lo) {
    throw ModelError("uniform holding time needs 1 <= lo <= hi");
  }
  std::vector<double> pmf(hi, 0.0);
  const double p = 1.0 / static_cast<double>(hi - lo + 1);
  for (std::size_t d = lo; d <= hi; ++d) {
    pmf[d - 1] = p;
  }
  return HoldingTimeDistribution(std::move(pmf));
}

std::size_t SemiMarkovNetworkChain::sigma() const {
  std::size_t s = 0;
  for (const auto& h : holding) {
    s = std::max(s, h.max_support());
  }
  return s;
}

std::size_t state_count(const NetworkChain& chain) {
  return std::visit([](const auto& c) { return c.state_count(); }, chain);
}

std::vector<Violation> validate_chain(const MarkovNetworkChain& chain, const std::string& field) {
  std::vector<Violation> out;
  check_stochastic(chain.transition, chain.initial, field, "P", out);
  return out;
}

std::vector<Violation> validate_chain(const SemiMarkovNetworkChain& chain,
                                      const std::string& field) {
  std::vector<Violation> out;
  check_stochastic(chain.embedded, chain.initial, field, "Q", out);
  if (chain.holding.size() != chain.state_count()) {
    out.push_back({field + ".holding", "expected one holding-time law per state (" +
                                           std::to_string(chain.state_count()) + "), got " +
                                           std::to_string(chain.holding.size())});
    return out;
  }
  for (std::size_t i = 0; i < chain.holding.size(); ++i) {
    const auto& pmf = chain.holding[i].pmf();
    const std::string name = indexed(field + ".holding", i);
    if (pmf.empty()) {
      out.push_back({name, "empty support; holding times need finite support in {1, 2, ...}"});
      continue;
    }
    if (std::any_of(pmf.begin(), pmf.end(), [](double p) { return !(p >= 0.0 && p <= 1.0); })) {
      out.push_back({name, "probabilities must lie in [0, 1]"});
      continue;
    }
    const double sum = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    if (std::abs(sum - 1.0) > kRowSumTol) {
      out.push_back({name, "sums to " + num(sum) + ", expected 1"});
    }
  }
  return out;
}

SemiMarkovNetworkChain as_semi_markov(const MarkovNetworkChain& chain) {
  SemiMarkovNetworkChain semi;
  semi.embedded = chain.transition;
  semi.initial = chain.initial;
  semi.holding.assign(chain.state_count(), HoldingTimeDistribution::point_mass(1));
  return semi;
}

StatePath sample_state_path(const MarkovNetworkChain& chain, std::size_t horizon, Rng& rng) {
  StatePath path;
  path.states.reserve(horizon);
  path.renewals.reserve(horizon);
  if (horizon == 0) {
    return path;
  }
  std::size_t state = sample_categorical(rng, chain.initial);
  for (std::size_t k = 0; k < horizon; ++k) {
    if (k > 0) {
      state = sample_categorical(rng, chain.transition.row(static_cast<Eigen::Index>(state)));
    }
    path.states.push_back(state);
    path.renewals.push_back(k);
  }
  return path;
}

StatePath sample_state_path(const SemiMarkovNetworkChain& chain, std::size_t horizon, Rng& rng) {
  StatePath path;
  path.states.reserve(horizon);
  if (horizon == 0) {
    return path;
  }
  std::size_t state = sample_categorical(rng, chain.initial);
  TimeIndex k = 0;
  while (k < horizon) {
    path.renewals.push_back(k);
    const std::size_t hold = 1 + sample_categorical(rng, chain.holding[state].pmf());
    const std::size_t next =
        sample_categorical(rng, chain.embedded.row(static_cast<Eigen::Index>(state)));
    for (std::size_t t = 0; t < hold && k < horizon; ++t, ++k) {
      path.states.push_back(state);
    }
    state = next;
  }
  return path;
}

StatePath sample_state_path(const NetworkChain& chain, std::size_t horizon, Rng& rng) {
  return std::visit([&](const auto& c) { return sample_state_path(c, horizon, rng); }, chain);
}

// ---------------------------------------------------------------------------
// Links

double sample_gain(const GainDistribution& dist, Rng& rng) {
  return std::visit(
      Overloaded{
          [](const PointMassGain& g) { return g.value; },
          [&](const ExponentialGain& g) { return -g.mean * std::log1p(-uniform01(rng)); },
          [&](const LogNormalGain& g) { return std::exp(g.mu + g.sigma * standard_normal(rng)); },
          [&](const DiscreteGain& g) { return g.values[sample_categorical(rng, g.probs)]; },
      },
      dist);
}

double SuccessFunction::operator()(double received_power, double bits) const {
  const double x = std::max(received_power, 0.0);
  const double single = std::visit(
      Overloaded{
          [&](const FskSuccess& f) {
            return std::pow(1.0 - 0.5 * std::exp(-x / (2.0 * f.noise_density)), bits);
          },
          [&](const ExpSnrSuccess& f) { return std::pow(-std::expm1(-x / f.scale), bits); },
          [&](const TableSuccess& f) {
            std::size_t bi = 0;
            while (bi + 1 < f.b_grid.size() && f.b_grid[bi] < bits) {
              ++bi;
            }
            const auto row = f.values.row(static_cast<Eigen::Index>(bi));
            const auto& xs = f.x_grid;
            if (x <= xs.front()) {
              return row(0);
            }
            if (x >= xs.back()) {
              return row(static_cast<Eigen::Index>(xs.size() - 1));
            }
            const auto hi = static_cast<std::size_t>(
                std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
            const std::size_t lo = hi - 1;
            const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
            return (1.0 - t) * row(static_cast<Eigen::Index>(lo)) +
                   t * row(static_cast<Eigen::Index>(hi));
          },
      },
      form);
  const double p = std::clamp(single, 0.0, 1.0);
  if (attempts <= 1) {
    return p;
  }
  return 1.0 - std::pow(1.0 - p, static_cast<double>(attempts));
}

double apply_power(const PowerPolicy& policy, std::size_t state, double gain) {
  return std::visit(Overloaded{
                        [](const ConstantPower& p) { return p.u; },
                        [&](const SaturatedInversePower& p) {
                          if (gain <= 0.0) {
                            return p.u_max;
                          }
                          return std::clamp(p.gain_k / gain, p.u_min, p.u_max);
                        },
                        [&](const PerStatePower& p) { return p.u.at(state); },
                    },
                    policy);
}

double apply_rate(const RatePolicy& policy, std::size_t state, double /*gain*/) {
  return std::visit(Overloaded{
                        [](const ConstantRate& r) { return r.b; },
                        [&](const PerStateRate& r) { return r.b.at(state); },
                    },
                    policy);
}

double PhysicalLink::success_given_gain(std::size_t state, double gain) const {
  const double u = apply_power(power, state, gain);
  const double b = apply_rate(rate, state, gain);
  return success(gain * u, b);
}

namespace {

void check_gain(const GainDistribution& dist, const std::string& field,
                std::vector<Violation>& out) {
  std::visit(
      Overloaded{
          [&](const PointMassGain& g) {
            if (!(g.value >= 0.0) || !std::isfinite(g.value)) {
              out.push_back({field, "point-mass gain must be finite and >= 0"});
            }
          },
          [&](const ExponentialGain& g) {
            if (!(g.mean > 0.0) || !std::isfinite(g.mean)) {
              out.push_back({field, "exponential gain needs a finite mean > 0 (unnormalizable)"});
            }
          },
          [&](const LogNormalGain& g) {
            if (!std::isfinite(g.mu) || !(g.sigma >= 0.0) || !std::isfinite(g.sigma)) {
              out.push_back({field, "lognormal gain needs finite mu and sigma >= 0"});
            }
          },
          [&](const DiscreteGain& g) {
            if (g.values.empty() || g.values.size() != g.probs.size()) {
              out.push_back({field, "discrete gain needs matching nonempty values/probs"});
              return;
            }
            const double sum = std::accumulate(g.probs.begin(), g.probs.end(), 0.0);
            if (std::abs(sum - 1.0) > 1e-9 ||
                std::any_of(g.probs.begin(), g.probs.end(), [](double p) { return p < 0.0; })) {
              out.push_back({field, "discrete gain probabilities sum to " + num(sum) +
                                        " (unnormalizable)"});
            }
            if (std::any_of(g.values.begin(), g.values.end(),
                            [](double v) { return !(v >= 0.0) || !std::isfinite(v); })) {
              out.push_back({field, "discrete gain values must be finite and >= 0"});
            }
          },
      },
      dist);
}

// f in [0, 1], nondecreasing in x and nonincreasing in b on a sampled grid.
void check_success_function(const SuccessFunction& f, const std::string& field,
                            std::vector<Violation>& out) {
  bool params_ok = std::visit(
      Overloaded{
          [&](const FskSuccess& s) {
            if (!(s.noise_density > 0.0)) {
              out.push_back({field, "fsk noise_density must be > 0"});
              return false;
            }
            return true;
          },
          [&](const ExpSnrSuccess& s) {
            if (!(s.scale > 0.0)) {
              out.push_back({field, "exp_snr scale must be > 0"});
              return false;
            }
            return true;
          },
          [&](const TableSuccess& s) {
            if (s.x_grid.size() < 2 || s.b_grid.empty() ||
                s.values.rows() != static_cast<Eigen::Index>(s.b_grid.size()) ||
                s.values.cols() != static_cast<Eigen::Index>(s.x_grid.size())) {
              out.push_back({field, "table needs >= 2 x points and values of shape |b| x |x|"});
              return false;
            }
            if (!std::is_sorted(s.x_grid.begin(), s.x_grid.end()) ||
                std::adjacent_find(s.x_grid.begin(), s.x_grid.end()) != s.x_grid.end() ||
                !std::is_sorted(s.b_grid.begin(), s.b_grid.end())) {
              out.push_back({field, "table grids must be strictly increasing"});
              return false;
            }
            return true;
          },
      },
      f.form);
  if (!params_ok) {
    return;
  }
  if (f.attempts < 1) {
    out.push_back({field, "retransmission attempts must be >= 1"});
    return;
  }
  const double bs[] = {1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0};
  double prev_row_at_x[64];
  for (int xi = 0; xi < 64; ++xi) {
    prev_row_at_x[xi] = 1.0;
  }
  for (double b : bs) {
    double prev = 0.0;
    for (int xi = 0; xi < 64; ++xi) {
      const double x = (xi == 0) ? 0.0 : std::pow(10.0, -4.0 + 8.0 * (xi - 1) / 62.0);
      const double v = f(x, b);
      if (!(v >= 0.0 && v <= 1.0)) {
        out.push_back({field, "f(x, b) outside [0, 1] at x=" + num(x) + ", b=" + num(b)});
        return;
      }
      if (v < prev - 1e-12) {
        out.push_back({field, "f is not nondecreasing in x near x=" + num(x)});
        return;
      }
      if (v > prev_row_at_x[xi] + 1e-12) {
        out.push_back({field, "f is not nonincreasing in b near b=" + num(b)});
        return;
      }
      prev = v;
      prev_row_at_x[xi] = v;
    }
  }
}

}  // namespace

std::vector<Violation> validate_link(const LinkModel& link, std::size_t state_count,
                                     const std::string& field) {
  std::vector<Violation> out;
  std::visit(
      Overloaded{
          [&](const DirectLink& d) {
            if (d.phi_by_state.size() != state_count) {
              out.push_back({field + ".phi", "expected " + std::to_string(state_count) +
                                                 " entries, got " +
                                                 std::to_string(d.phi_by_state.size())});
            }
            for (std::size_t j = 0; j < d.phi_by_state.size(); ++j) {
              const double p = d.phi_by_state[j];
              if (!(p >= 0.0 && p <= 1.0)) {
                out.push_back({indexed(field + ".phi", j), "must lie in [0, 1], got " + num(p)});
              }
            }
          },
          [&](const PhysicalLink& l) {
            if (l.gain_by_state.size() != state_count) {
              out.push_back({field + ".gain", "expected one gain law per state (" +
                                                  std::to_string(state_count) + "), got " +
                                                  std::to_string(l.gain_by_state.size())});
            }
            for (std::size_t j = 0; j < l.gain_by_state.size(); ++j) {
              check_gain(l.gain_by_state[j], indexed(field + ".gain", j), out);
            }
            check_success_function(l.success, field + ".success", out);
            if (const auto* p = std::get_if<PerStatePower>(&l.power);
                p && p->u.size() != state_count) {
              out.push_back({field + ".power", "per-state power needs one value per state"});
            }
            if (const auto* p = std::get_if<SaturatedInversePower>(&l.power);
                p && !(p->u_min >= 0.0 && p->u_min <= p->u_max && p->gain_k >= 0.0)) {
              out.push_back({field + ".power", "saturated power needs 0 <= u_min <= u_max, K >= 0"});
            }
            if (const auto* r = std::get_if<PerStateRate>(&l.rate);
                r && r->b.size() != state_count) {
              out.push_back({field + ".rate", "per-state rate needs one value per state"});
            }
          },
      },
      link);
  return out;
}

double link_success_prob(const LinkModel& link, std::size_t state) {
  if (const auto* direct = std::get_if<DirectLink>(&link)) {
    return std::clamp(direct->phi_by_state.at(state), 0.0, 1.0);
  }
  const auto& phys = std::get<PhysicalLink>(link);
  std::vector<Violation> bad;
  check_gain(phys.gain_by_state.at(state), "gain[" + std::to_string(state) + "]", bad);
  if (!bad.empty()) {
    throw ModelError(bad.front().field + ": " + bad.front().message);
  }
  const auto f = [&](double h) { return phys.success_given_gain(state, h); };
  const double value = std::visit(
      Overloaded{
          [&](const PointMassGain& g) { return f(g.value); },
          [&](const ExponentialGain& g) {
            // h = -mean * ln(1 - u) maps u ~ U[0, 1) onto the exponential law; the
            // Gauss-Legendre nodes never reach u = 1.
            return integrate_adaptive([&](double u) { return f(-g.mean * std::log1p(-u)); }, 0.0,
                                      1.0);
          },
          [&](const LogNormalGain& g) {
            if (g.sigma == 0.0) {
              return f(std::exp(g.mu));
            }
            const double inv_sqrt_2pi = 0.39894228040143267794;
            return integrate_adaptive(
                [&](double z) {
                  return f(std::exp(g.mu + g.sigma * z)) * inv_sqrt_2pi * std::exp(-0.5 * z * z);
                },
                -12.0, 12.0);
          },
          [&](const DiscreteGain& g) {
            double sum = 0.0;
            for (std::size_t i = 0; i < g.values.size(); ++i) {
              sum += g.probs[i] * f(g.values[i]);
            }
            return sum;
          },
      },
      phys.gain_by_state.at(state));
  return std::clamp(value, 0.0, 1.0);
}

Estimate link_success_prob_mc(const LinkModel& link, std::size_t state, std::size_t samples,
                              Rng& rng) {
  if (samples < 2) {
    throw std::invalid_argument("link_success_prob_mc: need at least 2 samples");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double v = 0.0;
    if (const auto* direct = std::get_if<DirectLink>(&link)) {
      v = bernoulli(rng, direct->phi_by_state.at(state)) ? 1.0 : 0.0;
    } else {
      const auto& phys = std::get<PhysicalLink>(link);
      v = phys.success_given_gain(state, sample_gain(phys.gain_by_state.at(state), rng));
    }
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

PhiTable phi_table(std::span<const LinkModel> links, std::size_t state_count) {
  PhiTable phi(static_cast<Eigen::Index>(links.size()), static_cast<Eigen::Index>(state_count));
  for (std::size_t m = 0; m < links.size(); ++m) {
    for (std::size_t j = 0; j < state_count; ++j) {
      phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
          link_success_prob(links[m], j);
    }
  }
  return phi;
}

double path_success_prob(const Topology& topology, const PhiTable& phi, std::size_t sensor,
                         std::size_t state) {
  double p = 1.0;
  for (std::size_t edge : topology.path_edges(sensor)) {
    p *= phi(static_cast<Eigen::Index>(edge - 1), static_cast<Eigen::Index>(state));
  }
  return p;
}

DropoutRealization sample_dropouts(const Topology& topology, std::span<const LinkModel> links,
                                   std::size_t state, Rng& rng) {
  if (links.size() != topology.sensor_count()) {
    throw DimensionError("sample_dropouts: one link model per edge is required");
  }
  DropoutRealization out;
  out.state = state;
  out.gamma.resize(links.size());
  for (std::size_t m = 0; m < links.size(); ++m) {
    double p = 0.0;
    if (const auto* direct = std::get_if<DirectLink>(&links[m])) {
      p = direct->phi_by_state.at(state);
    } else {
      const auto& phys = std::get<PhysicalLink>(links[m]);
      p = phys.success_given_gain(state, sample_gain(phys.gain_by_state.at(state), rng));
    }
    out.gamma[m] = bernoulli(rng, p) ? 1 : 0;
  }
  out.theta = topology.theta_from_gamma(out.gamma);
  return out;
}

DropoutRealization sample_dropouts(const Topology& topology, const PhiTable& phi,
                                   std::size_t state, Rng& rng) {
  if (static_cast<std::size_t>(phi.rows()) != topology.sensor_count()) {
    throw DimensionError("sample_dropouts: phi table needs one row per edge");
  }
  DropoutRealization out;
  out.state = state;
  out.gamma.resize(topology.sensor_count());
  for (std::size_t m = 0; m < out.gamma.size(); ++m) {
    out.gamma[m] =
        bernoulli(rng, phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(state))) ? 1
                                                                                            : 0;
  }
  out.theta = topology.theta_from_gamma(out.gamma);
  return out;
}

Observation assemble_observation(const PlantModel& plant, std::span<const std::uint8_t> theta,
                                 TimeIndex k) {
  if (theta.size() != plant.sensors.size()) {
    throw DimensionError("assemble_observation: theta has " + std::to_string(theta.size()) +
                         " entries, plant has " + std::to_string(plant.sensors.size()) +
                         " sensors");
  }
  Eigen::Index total_rows = 0;
  Eigen::Index received_rows = 0;
  Observation obs;
  for (std::size_t m = 0; m < theta.size(); ++m) {
    total_rows += plant.sensors[m].rows();
    if (theta[m]) {
      received_rows += plant.sensors[m].rows();
      obs.received.push_back(m);
    }
  }
  obs.stacked_c = Matrix::Zero(total_rows, plant.n);
  obs.stacked_r = Matrix::Zero(total_rows, total_rows);
  obs.c = Matrix::Zero(received_rows, plant.n);
  obs.r = Matrix::Zero(received_rows, received_rows);
  Eigen::Index full = 0;
  Eigen::Index compact = 0;
  for (std::size_t m = 0; m < theta.size(); ++m) {
    const SensorSpec& s = plant.sensors[m];
    const Eigen::Index l = s.rows();
    const Matrix& r = s.r_table(k);
    obs.stacked_r.block(full, full, l, l) = r;
    if (theta[m]) {
      obs.stacked_c.middleRows(full, l) = s.c;
      obs.c.middleRows(compact, l) = s.c;
      obs.r.block(compact, compact, l, l) = r;
      compact += l;
    }
    full += l;
  }
  return obs;
}

Vector stack_received(std::span<const Vector> measurements,
                      std::span<const std::size_t> received) {
  Eigen::Index rows = 0;
  for (std::size_t m : received) {
    rows += measurements[m].size();
  }
  Vector y(rows);
  Eigen::Index offset = 0;
  for (std::size_t m : received) {
    y.segment(offset, measurements[m].size()) = measurements[m];
    offset += measurements[m].size();
  }
  return y;
}

}  // namespace netkf
