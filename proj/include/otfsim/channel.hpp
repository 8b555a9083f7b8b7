#pragma once

/**
 * @file channel.hpp
 * @brief Random multipath channel generation and AWGN under the simulation
 * SNR conventions.
 *
 * Paths follow a power-delay profile with Rayleigh-faded gains and Jakes
 * Doppler shifts nu_i = nu_max * cos(theta_i), theta_i ~ U[0, 2pi). Gains are
 * drawn as g_i = sqrt(p_i) * CN(0,1) from the normalized PDP weights and then
 * renormalized per draw so sum |g_i|^2 = 1.
 *
 * SNR bookkeeping (single source of truth for scaling):
 *   pilot  SNR_p   = E_p / (MN * N0)
 *   data   SNR_d   = E_s / N0
 *   radar  SNR_rad = |g_i|^2 / N0
 */

#include <vector>

#include "otfsim/common.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/frame.hpp"
#include "otfsim/rng.hpp"

namespace otfsim {

struct ChannelProfile {
  std::vector<double> delays_us;  ///< path delays [microseconds], first >= 0
  std::vector<double> powers_db;  ///< relative path powers [dB]
  double v_max_kmh = 0;           ///< maximum reflector speed [km/h]
  bool rayleigh = true;           ///< Rayleigh-faded complex gains
  bool jitter_delays = false;     ///< optional per-draw delay jitter (off by default)

  ChannelProfile(std::vector<double> d, std::vector<double> p, double v)
      : delays_us(std::move(d)), powers_db(std::move(p)), v_max_kmh(v) {
    require(!delays_us.empty() && delays_us.size() == powers_db.size(),
            "ChannelProfile: delay and power lists must be non-empty and equal length");
    require(delays_us.front() >= 0, "ChannelProfile: first delay must be >= 0");
  }

  std::size_t path_count() const { return delays_us.size(); }
  double delay_spread_us() const { return delays_us.back(); }

  /// Maximum Doppler shift nu_max = (v_max/3.6) * f_c / c  [Hz].
  double nu_max_hz(const FrameGeometry& g) const {
    return v_max_kmh / 3.6 * g.f_c / kSpeedOfLight;
  }

  /// Normalized PDP weights p_i (sum to 1).
  std::vector<double> normalized_powers() const {
    std::vector<double> p(powers_db.size());
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = db_to_linear(powers_db[i]));
    for (auto& v : p) v /= s;
    return p;
  }
};

/// Extended Vehicular-style 4-tap profile used throughout the experiments.
inline ChannelProfile default_profile() {
  return ChannelProfile({0.0, 2.4, 5.0, 7.0}, {0.0, -1.0, -5.0, -7.0}, 500.0);
}

struct NoiseSpec {
  double N0;  ///< noise power spectral density; sigma^2 = N0 per DD component

  explicit NoiseSpec(double n0) : N0(n0) {
    require(N0 > 0, "NoiseSpec: N0 must be positive");
  }
};

/// Draw one channel realization. The per-draw gain renormalization keeps
/// sum |g_i|^2 = 1 exactly. guard_delay_us, when positive, rejects profiles
/// whose delay spread exceeds the CP guard.
inline PathSet draw_channel(const ChannelProfile& profile, const FrameGeometry& g,
                            std::mt19937_64& rng, double guard_delay_us = 0.0) {
  if (guard_delay_us > 0)
    require(profile.delay_spread_us() <= guard_delay_us,
            "draw_channel: delay spread exceeds the CP guard");
  auto p = profile.normalized_powers();
  double nu_max = profile.nu_max_hz(g);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(2.0));
  PathSet out;
  for (std::size_t i = 0; i < profile.path_count(); ++i) {
    cxd gain;
    if (profile.rayleigh) {
      gain = std::sqrt(p[i]) * cxd(nd(rng), nd(rng));
    } else {
      gain = std::sqrt(p[i]) * std::exp(cxd(0, uni(rng)));
    }
    double tau_us = profile.delays_us[i];
    if (profile.jitter_delays && i > 0) {
      std::uniform_real_distribution<double> jit(-0.5, 0.5);
      tau_us += jit(rng) * g.delay_res() * 1e6;
    }
    double nu = nu_max * std::cos(uni(rng));
    double l = tau_us * 1e-6 / g.delay_res();
    double k = nu / g.doppler_res();
    out.paths.emplace_back(gain, l, k);
  }
  out.normalize_gains();
  return out;
}

/// Noiseless channel application y = H_DD x (fast operator path).
inline Vec apply_channel(const PathSet& paths, const FrameGeometry& g, const Vec& x) {
  return DdChannelOperator(g, paths).forward(x);
}

/// Add circularly-symmetric complex AWGN with per-component variance N0.
inline Vec add_awgn(const Vec& y, const NoiseSpec& spec, std::mt19937_64& rng) {
  return y + complex_gaussian(rng, y.size(), spec.N0);
}

}  // namespace otfsim
