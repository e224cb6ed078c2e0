#pragma once

#include <cstdint>
#include <random>

namespace netkf {

/// Every sampler takes one of these by reference; one stream per trial.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `stream` under `master`: splitmix64(splitmix64(master) ^ stream).
/// Trial t of an experiment uses derive_seed(master_seed, t).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ stream);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng{derive_seed(master, stream)};
}

/// Uniform draw on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Index drawn from a probability vector (entries assumed to sum to 1).
template <typename Probabilities>
std::size_t sample_categorical(Rng& rng, const Probabilities& probs) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const std::size_t n = static_cast<std::size_t>(probs.size());
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) {
      return i;
    }
  }
  // Rounding left a sliver above the cumulative sum; return the last nonzero entry.
  for (std::size_t i = n; i-- > 0;) {
    if (probs[i] > 0.0) {
      return i;
    }
  }
  return n - 1;
}

/// Standard normal via std::normal_distribution (libstdc++ Marsaglia polar).
inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist;
  return dist(rng);
}

/// Fills `out` with independent standard normals from one distribution object.
template <typename Vec>
void fill_standard_normal(Rng& rng, Vec& out) {
  std::normal_distribution<double> dist;
  for (auto i = decltype(out.size()){0}; i < out.size(); ++i) {
    out[i] = dist(rng);
  }
}

}  // namespace netkf
