#include "netkf/drift_probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace netkf {

namespace {

struct Triple {
  std::size_t state;
  double v;
  double v_next;
  bool first_half;
};

std::vector<Triple> collect(std::span<const TrialLog> logs) {
  std::vector<Triple> out;
  const std::size_t half = (logs.size() + 1) / 2;
  for (std::size_t t = 0; t < logs.size(); ++t) {
    const auto& steps = logs[t].steps;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
      if (!steps[k].prev_state) {
        continue;
      }
      const double v = steps[k].trace_p;
      const double vn = steps[k + 1].trace_p;
      if (!std::isfinite(v) || !std::isfinite(vn)) {
        continue;
      }
      out.push_back({*steps[k].prev_state, v, vn, t < half});
    }
  }
  return out;
}

bool agree(double a, double b, double ratio, double floor) {
  if (std::abs(a) <= floor && std::abs(b) <= floor) {
    return true;
  }
  if (a <= 0.0 || b <= 0.0) {
    return std::abs(a - b) <= floor;
  }
  return std::max(a, b) / std::min(a, b) < ratio;
}

}  // namespace

DriftProbe drift_probe(std::span<const TrialLog> logs, double rho_cert,
                       const DriftProbeOptions& options) {
  auto triples = collect(logs);
  if (triples.size() < options.min_samples) {
    throw std::invalid_argument("drift_probe: need at least " +
                                std::to_string(options.min_samples) + " triples, got " +
                                std::to_string(triples.size()));
  }
  DriftProbe probe;
  probe.rho = rho_cert;
  probe.samples = triples.size();

  std::map<std::size_t, std::vector<const Triple*>> by_state;
  for (const auto& t : triples) {
    by_state[t.state].push_back(&t);
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double beta_half[2] = {kNegInf, kNegInf};
  probe.beta_hat = kNegInf;
  probe.beta_low_v = kNegInf;
  probe.beta_high_v = kNegInf;
  double scale = 0.0;

  for (auto& [state, members] : by_state) {
    std::sort(members.begin(), members.end(),
              [](const Triple* a, const Triple* b) { return a->v < b->v; });
    const std::size_t nb = options.bins_per_state;
    for (std::size_t d = 0; d < nb; ++d) {
      const std::size_t lo = members.size() * d / nb;
      const std::size_t hi = members.size() * (d + 1) / nb;
      DriftBin bin;
      bin.state = state;
      bin.decile = d;
      bin.count = hi - lo;
      if (bin.count == 0) {
        continue;
      }
      bin.v_lo = members[lo]->v;
      bin.v_hi = members[hi - 1]->v;
      double sv = 0.0, svn = 0.0;
      double part_v[2] = {0, 0}, part_vn[2] = {0, 0};
      std::size_t part_n[2] = {0, 0};
      for (std::size_t i = lo; i < hi; ++i) {
        const Triple& t = *members[i];
        sv += t.v;
        svn += t.v_next;
        const int h = t.first_half ? 0 : 1;
        part_v[h] += t.v;
        part_vn[h] += t.v_next;
        ++part_n[h];
      }
      bin.mean_v = sv / static_cast<double>(bin.count);
      bin.mean_v_next = svn / static_cast<double>(bin.count);
      bin.beta = bin.mean_v_next - rho_cert * bin.mean_v;
      bin.inconclusive = bin.count < options.min_per_bin;
      probe.bins.push_back(bin);
      if (bin.inconclusive) {
        continue;
      }
      scale = std::max(scale, bin.mean_v_next);
      probe.beta_hat = std::max(probe.beta_hat, bin.beta);
      if (2 * d < nb) {
        probe.beta_low_v = std::max(probe.beta_low_v, bin.beta);
      } else {
        probe.beta_high_v = std::max(probe.beta_high_v, bin.beta);
      }
      for (int h = 0; h < 2; ++h) {
        if (part_n[h] >= options.min_per_bin) {
          const auto n = static_cast<double>(part_n[h]);
          beta_half[h] = std::max(beta_half[h], part_vn[h] / n - rho_cert * part_v[h] / n);
        }
      }
    }
  }
  probe.beta_first_half = beta_half[0];
  probe.beta_second_half = beta_half[1];

  // Slope of the conditional means across conclusive bins.
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& b : probe.bins) {
    if (b.inconclusive) {
      continue;
    }
    n += 1;
    sx += b.mean_v;
    sy += b.mean_v_next;
    sxx += b.mean_v * b.mean_v;
    sxy += b.mean_v * b.mean_v_next;
  }
  const double den = n * sxx - sx * sx;
  probe.empirical_slope = den > 0 ? (n * sxy - sx * sy) / den : 0.0;

  const double floor = 1e-9 * std::max(scale, 1.0);
  if (!(rho_cert >= 0.0 && rho_cert < 1.0)) {
    probe.verdict = "fail: certified rate outside [0,1), no contraction to test against";
  } else if (!std::isfinite(probe.beta_hat)) {
    probe.verdict = "inconclusive: no bin has enough samples";
  } else if (!std::isfinite(beta_half[0]) || !std::isfinite(beta_half[1]) ||
             !agree(beta_half[0], beta_half[1], options.stability_ratio, floor)) {
    probe.verdict = "fail: beta_hat differs between the two halves of the trials";
  } else if (std::isfinite(probe.beta_high_v) &&
             probe.beta_high_v >
                 options.stability_ratio * std::max(probe.beta_low_v, floor)) {
    probe.verdict = "fail: drift offset grows with V_k";
  } else {
    probe.passed = true;
    probe.verdict = "pass";
  }
  return probe;
}

}  // namespace netkf
