#pragma once

/**
 * @file rng.hpp
 * @brief Reproducible random-number plumbing for Monte Carlo trials.
 *
 * One master seed per experiment; each trial gets an independent child stream
 * whose seed is derived deterministically as
 *   child_seed(master, index) = splitmix64(master ^ splitmix64(index + 1)).
 * This is the documented counter scheme: trials can run concurrently and in
 * any order while producing bit-identical results.
 */

#include <cstdint>
#include <random>

#include "otfsim/common.hpp"

namespace otfsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Circularly-symmetric complex Gaussian vector, per-component variance var
/// (var/2 per real dimension).
inline Vec complex_gaussian(std::mt19937_64& rng, Eigen::Index n, double var = 1.0) {
  std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double re = nd(rng);
    double im = nd(rng);
    v[i] = cxd(re, im);
  }
  return v;
}

}  // namespace otfsim
