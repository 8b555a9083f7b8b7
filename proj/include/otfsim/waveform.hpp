#pragma once

/**
 * @file waveform.hpp
 * @brief OTFS modulation/demodulation with reduced cyclic prefix.
 *
 * Symbols live on an M x N delay-Doppler grid X; x = vec(X) column-major.
 * With identity pulse shaping the transmit samples are s = (F_N^H (x) I_M) x
 * and the receiver recovers y = (F_N (x) I_M) r. A single CP protects the
 * whole N-block frame (reduced CP), which makes the effective channel cyclic
 * over MN samples.
 */

#include "otfsim/common.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/frame.hpp"

namespace otfsim {

struct DdGrid {
  FrameGeometry geometry;
  Mat symbols;  ///< M x N

  explicit DdGrid(const FrameGeometry& g) : geometry(g), symbols(Mat::Zero(g.M, g.N)) {}
  DdGrid(const FrameGeometry& g, Mat x) : geometry(g), symbols(std::move(x)) {
    require(symbols.rows() == g.M && symbols.cols() == g.N,
            "DdGrid: symbol matrix must be M x N");
  }

  /// Column-major vectorization: vec index q = m + n*M.
  Vec vec() const { return Eigen::Map<const Vec>(symbols.data(), geometry.MN()); }

  static DdGrid from_vec(const FrameGeometry& g, const Vec& x) {
    require(x.size() == g.MN(), "DdGrid::from_vec: vector length must be M*N");
    return DdGrid(g, Eigen::Map<const Mat>(x.data(), g.M, g.N));
  }
};

struct PilotSpec {
  int m_p;      ///< pilot delay index in [0, M)
  int n_p;      ///< pilot Doppler index in [0, N)
  double E_p;   ///< pilot energy, > 0

  PilotSpec(int m, int n, double e) : m_p(m), n_p(n), E_p(e) {
    require(E_p > 0, "PilotSpec: pilot energy must be positive");
  }
};

/// Default pilot placement: grid center (ceil(M/2), ceil(N/2)), maximizing
/// guard distance to the grid edges for the delay/Doppler search window.
inline PilotSpec centered_pilot(const FrameGeometry& g, double E_p) {
  return PilotSpec((g.M + 1) / 2, (g.N + 1) / 2, E_p);
}

/// Pilot energy for a declared pilot SNR: SNR_p = E_p / (MN * N0).
inline double pilot_energy_for_snr(const FrameGeometry& g, double snr_p_db, double N0) {
  require(N0 > 0, "pilot_energy_for_snr: N0 must be positive");
  return static_cast<double>(g.MN()) * N0 * db_to_linear(snr_p_db);
}

inline DdGrid make_pilot_frame(const PilotSpec& spec, const FrameGeometry& g) {
  require(spec.m_p >= 0 && spec.m_p < g.M && spec.n_p >= 0 && spec.n_p < g.N,
          "make_pilot_frame: pilot indices outside the grid");
  DdGrid grid(g);
  grid.symbols(spec.m_p, spec.n_p) = std::sqrt(spec.E_p);
  return grid;
}

/// s = (F_N^H (x) I_M) x — time-domain transmit samples (unitary).
inline Vec modulate(const DdGrid& grid) {
  Vec s = grid.vec();
  detail::apply_a(grid.geometry, s, /*inverse=*/true);
  return s;
}

/// y = (F_N (x) I_M) r — back to the delay-Doppler domain (unitary).
inline Vec demodulate(const FrameGeometry& g, const Vec& r) {
  require(r.size() == g.MN(), "demodulate: vector length must be M*N");
  Vec y = r;
  detail::apply_a(g, y, /*inverse=*/false);
  return y;
}

/// Prepend the last cp_len samples (reduced CP over the whole frame).
inline Vec add_rcp(const Vec& s, int cp_len) {
  require(cp_len >= 0 && cp_len < s.size(), "add_rcp: cp_len must be in [0, MN)");
  Vec out(s.size() + cp_len);
  out.head(cp_len) = s.tail(cp_len);
  out.tail(s.size()) = s;
  return out;
}

inline Vec remove_rcp(const Vec& r_cp, int cp_len) {
  require(cp_len >= 0 && cp_len < r_cp.size(), "remove_rcp: cp_len out of range");
  return r_cp.tail(r_cp.size() - cp_len);
}

}  // namespace otfsim
