#pragma once

/**
 * @file estimation.hpp
 * @brief Disjoint delay-Doppler channel estimation and radar sensing.
 *
 * The correlation-based estimator extracts paths greedily from a received
 * pilot frame: integer init by peak search in the pilot window, hierarchical
 * Doppler refinement, Doppler compensation, hierarchical delay refinement,
 * gain by orthogonal projection, then inter-path-interference cancellation.
 * Also provided: the integer-only threshold baseline, a residual-energy
 * stopping criterion for path-count estimation, and monostatic sensing that
 * reuses the same loop against a known transmitted data frame.
 */

#include <string>
#include <vector>

#include "otfsim/common.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/frame.hpp"
#include "otfsim/waveform.hpp"

namespace otfsim {

struct EstimatorConfig {
  int L_max = 7;   ///< max integer delay searched, in [0, M)
  int K_max = 3;   ///< max |integer Doppler| searched, <= floor(N/2)
  int L_h = 2;     ///< hierarchical refinement levels, >= 1
  int N_l = 7;     ///< delay half grid size per level
  int N_k = 7;     ///< Doppler half grid size per level
  double sc_gamma = 0.05;  ///< residual-ratio stop threshold for the SC rule
  int max_paths = 8;       ///< hard cap on greedy extractions (SC safety)

  void validate(const FrameGeometry& g) const {
    require(L_h >= 1, "EstimatorConfig: L_h must be >= 1");
    require(N_l >= 1 && N_k >= 1, "EstimatorConfig: N_l, N_k must be >= 1");
    require(L_max >= 0 && L_max < g.M, "EstimatorConfig: L_max must be in [0, M)");
    require(K_max >= 0 && K_max <= g.N / 2, "EstimatorConfig: K_max must be <= N/2");
    require(sc_gamma > 0 && sc_gamma < 1, "EstimatorConfig: sc_gamma must be in (0,1)");
  }

  /// Physical defaults from a channel profile: delay spread and mobility
  /// bound the search window.
  static EstimatorConfig from_profile(const FrameGeometry& g, double sigma_tau_s,
                                      double nu_max_hz) {
    EstimatorConfig cfg;
    cfg.L_max = static_cast<int>(std::ceil(sigma_tau_s / g.delay_res()));
    cfg.K_max = static_cast<int>(std::ceil(nu_max_hz / g.doppler_res()));
    return cfg;
  }
};

struct EstimationReport {
  PathSet paths;                          ///< extracted (gain, l, k) triples
  std::vector<double> residual_energy;    ///< ||y^(i)||^2, entry 0 = initial
  std::vector<std::vector<double>> doppler_trace;  ///< per-path k-hat per level
  std::vector<std::vector<double>> delay_trace;    ///< per-path l-hat per level
  int P_hat = 0;
  std::string p_source = "known";
};

/// Integer peak search: argmax over [0,L_max] x [-K_max,K_max] of
/// |Y[(m_p+L) mod M, (n_p+K) mod N]|^2. Ties break to the first candidate in
/// (L ascending, K ascending) order.
inline std::pair<int, int> integer_dd_init(const FrameGeometry& g, const Vec& y_res,
                                           const PilotSpec& pilot,
                                           const EstimatorConfig& cfg) {
  require(y_res.size() == g.MN(), "integer_dd_init: vector length must be M*N");
  int bestL = 0, bestK = -cfg.K_max;
  double best = -1.0;
  for (int L = 0; L <= cfg.L_max; ++L) {
    for (int K = -cfg.K_max; K <= cfg.K_max; ++K) {
      int m = (pilot.m_p + L) % g.M;
      int n = ((pilot.n_p + K) % g.N + g.N) % g.N;
      double val = std::norm(y_res[m + n * g.M]);
      if (val > best) {
        best = val;
        bestL = L;
        bestK = K;
      }
    }
  }
  return {bestL, bestK};
}

namespace detail {

/// |x^H Q^T(l) Q^H(k) y| — the matched-filter correlation objective.
inline double mf_correlation(const FrameGeometry& g, const Vec& x, const Vec& y,
                             double l, double k) {
  Vec w = apply_q(g, k, y, QMode::kAdjoint);
  w = apply_q(g, l, w, QMode::kTranspose);
  return std::abs(x.dot(w));  // Eigen dot conjugates the left argument
}

}  // namespace detail

/// Hierarchical Doppler refinement around integer estimate K_hat, with the
/// delay candidate frozen at L_hat. Level h scans kappa in [-N_k, N_k] at
/// resolution 1/(2 N_k)^h, recentered on the running estimate. Returns the
/// refined k-hat; if trace is non-null, appends the estimate after each level.
inline double refine_doppler(const FrameGeometry& g, const Vec& y_res, const Vec& x_p,
                             int L_hat, int K_hat, const EstimatorConfig& cfg,
                             std::vector<double>* trace = nullptr) {
  double kt = 0.0;
  double step = 1.0;
  for (int h = 1; h <= cfg.L_h; ++h) {
    step /= 2.0 * cfg.N_k;
    double best = -1.0;
    int best_kappa = 0;
    for (int kappa = -cfg.N_k; kappa <= cfg.N_k; ++kappa) {
      double cand = K_hat + kt + kappa * step;
      double val = detail::mf_correlation(g, x_p, y_res, L_hat, cand);
      if (val > best) {
        best = val;
        best_kappa = kappa;
      }
    }
    kt += best_kappa * step;
    if (trace) trace->push_back(K_hat + kt);
  }
  return K_hat + kt;
}

/// y_d = Q^H(k_hat) y — removes the estimated Doppler before the delay scan.
inline Vec doppler_compensate(const FrameGeometry& g, const Vec& y_res, double k_hat) {
  return apply_q(g, k_hat, y_res, QMode::kAdjoint);
}

/// Hierarchical delay refinement on the Doppler-compensated observation.
/// The scan grid is symmetric; candidates that would make the total delay
/// negative are skipped, so for L_hat = 0 the first level reduces to the
/// one-sided grid [0, N_l].
inline double refine_delay(const FrameGeometry& g, const Vec& y_d, const Vec& x_p,
                           int L_hat, const EstimatorConfig& cfg,
                           std::vector<double>* trace = nullptr) {
  double lt = 0.0;
  double step = 1.0;
  for (int h = 1; h <= cfg.L_h; ++h) {
    step /= 2.0 * cfg.N_l;
    double best = -1.0;
    int best_ell = 0;
    bool found = false;
    for (int ell = -cfg.N_l; ell <= cfg.N_l; ++ell) {
      double cand = L_hat + lt + ell * step;
      if (cand < 0) continue;
      Vec w = apply_q(g, cand, y_d, QMode::kTranspose);
      double val = std::abs(x_p.dot(w));
      if (!found || val > best) {
        best = val;
        best_ell = ell;
        found = true;
      }
    }
    lt += best_ell * step;
    if (trace) trace->push_back(L_hat + lt);
  }
  return L_hat + lt;
}

/// Orthogonal projection of the residual onto the reconstructed direction:
/// g-hat = (T(l,k) x_ref)^H y / E_ref with E_ref = ||x_ref||^2 (pilot: E_p).
inline cxd estimate_gain(const FrameGeometry& g, const Vec& y_res, double l_hat,
                         double k_hat, const Vec& x_ref, double E_ref) {
  require(E_ref > 0, "estimate_gain: reference energy must be positive");
  Vec tx = apply_t(g, l_hat, k_hat, x_ref);
  return tx.dot(y_res) / E_ref;
}

/// y_next = y_res - g_hat * T(l,k) x_ref — cancel the extracted path.
inline Vec cancel_ipi(const FrameGeometry& g, const Vec& y_res, cxd g_hat, double l_hat,
                      double k_hat, const Vec& x_ref) {
  return y_res - g_hat * apply_t(g, l_hat, k_hat, x_ref);
}

/// Greedy correlation-based estimator: P passes of init/refine/project/cancel
/// against the pilot frame.
inline EstimationReport estimate_channel(const FrameGeometry& g, const Vec& y,
                                         const PilotSpec& pilot,
                                         const EstimatorConfig& cfg, int P) {
  cfg.validate(g);
  require(P >= 1, "estimate_channel: path count must be >= 1");
  require(y.size() == g.MN(), "estimate_channel: vector length must be M*N");
  Vec x_p = make_pilot_frame(pilot, g).vec();
  EstimationReport rep;
  rep.P_hat = P;
  Vec y_res = y;
  rep.residual_energy.push_back(y_res.squaredNorm());
  for (int i = 0; i < P; ++i) {
    auto [L, K] = integer_dd_init(g, y_res, pilot, cfg);
    rep.doppler_trace.emplace_back();
    rep.delay_trace.emplace_back();
    double k_hat = refine_doppler(g, y_res, x_p, L, K, cfg, &rep.doppler_trace.back());
    Vec y_d = doppler_compensate(g, y_res, k_hat);
    double l_hat = refine_delay(g, y_d, x_p, L, cfg, &rep.delay_trace.back());
    cxd g_hat = estimate_gain(g, y_res, l_hat, k_hat, x_p, pilot.E_p);
    y_res = cancel_ipi(g, y_res, g_hat, l_hat, k_hat, x_p);
    rep.paths.paths.emplace_back(g_hat, l_hat, k_hat);
    rep.residual_energy.push_back(y_res.squaredNorm());
  }
  return rep;
}

/// Integer-only threshold baseline: declare a path at every window bin whose
/// magnitude exceeds the threshold. The received bin for an integer path
/// (L, K) is g*sqrt(E_p)*z^{K(m_p+L)} (times a Doppler wrap phase when
/// m_p+L >= M), which the gain estimate divides out.
inline EstimationReport threshold_estimate(const FrameGeometry& g, const Vec& y,
                                           const PilotSpec& pilot, double threshold,
                                           const EstimatorConfig& cfg) {
  require(threshold > 0, "threshold_estimate: threshold must be positive");
  require(y.size() == g.MN(), "threshold_estimate: vector length must be M*N");
  const int MN = g.MN();
  EstimationReport rep;
  rep.p_source = "threshold";
  rep.residual_energy.push_back(y.squaredNorm());
  for (int L = 0; L <= cfg.L_max; ++L) {
    for (int K = -cfg.K_max; K <= cfg.K_max; ++K) {
      int m = (pilot.m_p + L) % g.M;
      int n = ((pilot.n_p + K) % g.N + g.N) % g.N;
      cxd v = y[m + n * g.M];
      if (std::abs(v) > threshold) {
        double ang = 2.0 * kPi * K * (pilot.m_p + L) / MN;
        cxd phase = std::exp(cxd(0, ang));
        int wraps = (pilot.m_p + L) / g.M;
        if (wraps > 0) {
          double wang = -2.0 * kPi * n / g.N;
          phase *= std::exp(cxd(0, wang * wraps));
        }
        cxd g_hat = v / (std::sqrt(pilot.E_p) * phase);
        rep.paths.paths.emplace_back(g_hat, static_cast<double>(L),
                                     static_cast<double>(K));
      }
    }
  }
  rep.P_hat = static_cast<int>(rep.paths.size());
  return rep;
}

/// Stopping-criterion path-count estimate: run the greedy loop, but stop
/// before iteration i when the peak window bin falls below the detection
/// energy (3*sigma)^2 or the residual ratio falls below sc_gamma.
inline int sc_estimate_P(const FrameGeometry& g, const Vec& y, const PilotSpec& pilot,
                         const EstimatorConfig& cfg, double sigma) {
  cfg.validate(g);
  Vec x_p = make_pilot_frame(pilot, g).vec();
  Vec y_res = y;
  const double e0 = y.squaredNorm();
  const double gate = 9.0 * sigma * sigma;
  int count = 0;
  while (count < cfg.max_paths) {
    auto [L, K] = integer_dd_init(g, y_res, pilot, cfg);
    int m = (pilot.m_p + L) % g.M;
    int n = ((pilot.n_p + K) % g.N + g.N) % g.N;
    if (std::norm(y_res[m + n * g.M]) < gate) break;
    if (y_res.squaredNorm() / e0 < cfg.sc_gamma) break;
    double k_hat = refine_doppler(g, y_res, x_p, L, K, cfg);
    Vec y_d = doppler_compensate(g, y_res, k_hat);
    double l_hat = refine_delay(g, y_d, x_p, L, cfg);
    cxd g_hat = estimate_gain(g, y_res, l_hat, k_hat, x_p, pilot.E_p);
    y_res = cancel_ipi(g, y_res, g_hat, l_hat, k_hat, x_p);
    ++count;
  }
  return count;
}

struct TargetEstimate {
  cxd gain;
  double l = 0, k = 0;
  double range_m = 0;
  double velocity_ms = 0;
};

inline double range_from_l(const FrameGeometry& g, double l) {
  return l * g.delay_res() * kSpeedOfLight / 2.0;
}

inline double velocity_from_k(const FrameGeometry& g, double k) {
  require(g.f_c > 0, "velocity_from_k: carrier frequency must be set");
  return k * g.doppler_res() * kSpeedOfLight / (2.0 * g.f_c);
}

/// Monostatic sensing: the same greedy loop run against the known transmitted
/// data frame x (integer init by matched-filter scan, since the reference is
/// not a single pilot bin), with the projection normalized by ||x||^2.
/// Round-trip conversions: d = l*dtau*c/2, v = k*dnu*c/(2 f_c).
inline std::vector<TargetEstimate> sense_targets(const FrameGeometry& g, const Vec& y,
                                                 const Vec& x_known,
                                                 const EstimatorConfig& cfg,
                                                 int num_targets) {
  cfg.validate(g);
  require(num_targets >= 1, "sense_targets: target count must be >= 1");
  require(y.size() == g.MN() && x_known.size() == g.MN(),
          "sense_targets: vector length must be M*N");
  const double Ex = x_known.squaredNorm();
  Vec y_res = y;
  std::vector<TargetEstimate> out;
  for (int t = 0; t < num_targets; ++t) {
    int bestL = 0, bestK = -cfg.K_max;
    double best = -1.0;
    for (int L = 0; L <= cfg.L_max; ++L)
      for (int K = -cfg.K_max; K <= cfg.K_max; ++K) {
        double val = detail::mf_correlation(g, x_known, y_res, L, K);
        if (val > best) {
          best = val;
          bestL = L;
          bestK = K;
        }
      }
    double k_hat = refine_doppler(g, y_res, x_known, bestL, bestK, cfg);
    Vec y_d = doppler_compensate(g, y_res, k_hat);
    double l_hat = refine_delay(g, y_d, x_known, bestL, cfg);
    cxd g_hat = estimate_gain(g, y_res, l_hat, k_hat, x_known, Ex);
    y_res = cancel_ipi(g, y_res, g_hat, l_hat, k_hat, x_known);
    TargetEstimate te;
    te.gain = g_hat;
    te.l = l_hat;
    te.k = k_hat;
    te.range_m = range_from_l(g, l_hat);
    te.velocity_ms = velocity_from_k(g, k_hat);
    out.push_back(te);
  }
  return out;
}

}  // namespace otfsim
