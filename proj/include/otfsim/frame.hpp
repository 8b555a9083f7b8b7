#pragma once

/**
 * @file frame.hpp
 * @brief OTFS frame geometry and multipath path parameterization.
 *
 * A frame has M delay bins (subcarriers) and N Doppler bins (time slots).
 * Delay resolution is dtau = 1/(M*delta_f), Doppler resolution is
 * dnu = delta_f/N, so dtau*dnu*M*N = 1. A propagation path is described by
 * a complex gain and normalized (possibly fractional) delay/Doppler shifts
 * l = tau/dtau and k = nu/dnu.
 */

#include <cmath>
#include <cstddef>
#include <vector>

#include "otfsim/common.hpp"

namespace otfsim {

struct FrameGeometry {
  int M = 0;          ///< subcarrier (delay-bin) count
  int N = 0;          ///< time-slot (Doppler-bin) count
  double delta_f = 0; ///< subcarrier spacing [Hz]
  double f_c = 0;     ///< carrier frequency [Hz]

  FrameGeometry(int M_, int N_, double delta_f_, double f_c_ = 0.0)
      : M(M_), N(N_), delta_f(delta_f_), f_c(f_c_) {
    require(M >= 1 && N >= 1, "FrameGeometry: M and N must be >= 1");
    require(delta_f > 0, "FrameGeometry: delta_f must be positive");
  }

  int MN() const { return M * N; }
  double T() const { return 1.0 / delta_f; }              ///< symbol time [s]
  double delay_res() const { return 1.0 / (M * delta_f); } ///< dtau [s]
  double doppler_res() const { return delta_f / N; }       ///< dnu [Hz]
};

struct PathParams {
  cxd gain;   ///< complex path gain g_i
  double l;   ///< normalized delay (units of dtau), l >= 0
  double k;   ///< normalized Doppler (units of dnu)

  PathParams(cxd gain_, double l_, double k_) : gain(gain_), l(l_), k(k_) {
    require(std::isfinite(l) && std::isfinite(k), "PathParams: l,k must be finite");
    require(l >= 0.0, "PathParams: normalized delay must be non-negative");
  }

  /// Integer part of the delay, rounding half away from zero.
  long L() const { return round_half_away(l); }
  /// Integer part of the Doppler, rounding half away from zero.
  long K() const { return round_half_away(k); }
  double l_frac() const { return l - static_cast<double>(L()); }
  double k_frac() const { return k - static_cast<double>(K()); }
};

struct PathSet {
  std::vector<PathParams> paths;

  PathSet() = default;
  explicit PathSet(std::vector<PathParams> p) : paths(std::move(p)) {}

  std::size_t size() const { return paths.size(); }
  bool empty() const { return paths.empty(); }

  double total_gain_energy() const {
    double e = 0;
    for (const auto& p : paths) e += std::norm(p.gain);
    return e;
  }

  /// Rescale gains so that sum |g_i|^2 = 1.
  void normalize_gains() {
    double e = total_gain_energy();
    require(e > 0, "PathSet: cannot normalize zero-energy gains");
    double s = 1.0 / std::sqrt(e);
    for (auto& p : paths) p.gain *= s;
  }
};

}  // namespace otfsim
