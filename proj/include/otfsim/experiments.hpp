#pragma once

/**
 * @file experiments.hpp
 * @brief Monte Carlo sweep orchestration.
 *
 * Every experiment is a pure function of (config, master seed): trial t of
 * sweep point p draws its RNG stream from child_seed(master, p*2^20 + t), so
 * results are bit-identical across runs and thread counts. Trials fan out to
 * a simple worker pool and are reduced in trial-index order.
 */

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "otfsim/channel.hpp"
#include "otfsim/config.hpp"
#include "otfsim/constellation.hpp"
#include "otfsim/equalizer.hpp"
#include "otfsim/estimation.hpp"
#include "otfsim/fnn.hpp"
#include "otfsim/metrics.hpp"

namespace otfsim {

/// Deterministic per-(point, trial) seed stream.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::size_t trial) {
  return child_seed(master, (static_cast<std::uint64_t>(point) << 20) + trial);
}

/// Run fn(trial_index) for indices [0, n) on `threads` workers; results land
/// in a vector indexed by trial, so the reduction order is deterministic.
template <typename T>
std::vector<T> parallel_trials(int n, int threads, const std::function<T(int)>& fn) {
  require(n >= 1 && threads >= 1, "parallel_trials: invalid counts");
  std::vector<T> out(static_cast<std::size_t>(n));
  if (threads == 1) {
    for (int t = 0; t < n; ++t) out[static_cast<std::size_t>(t)] = fn(t);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int t = next.fetch_add(1);
        if (t >= n) return;
        try {
          out[static_cast<std::size_t>(t)] = fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

struct SweepResult {
  std::string sweep_name;
  std::vector<MetricRow> rows;
};

namespace detail {

/// Linear-mean NMSE row in dB; the standard error is propagated to dB by the
/// delta method (10/ln10 * se/mean).
inline MetricRow nmse_row(double sweep_value, const std::string& metric,
                          const std::vector<double>& linear_ratios) {
  auto [mean, se] = mean_stderr(linear_ratios);
  MetricRow r;
  r.sweep_value = sweep_value;
  r.metric = metric;
  r.mean = nmse_db(mean);
  r.stderr_ = mean > 0 ? 10.0 / std::log(10.0) * se / mean : 0.0;
  r.trials = static_cast<long>(linear_ratios.size());
  return r;
}

inline MetricRow plain_row(double sweep_value, const std::string& metric,
                           const std::vector<double>& samples) {
  auto [mean, se] = mean_stderr(samples);
  return MetricRow{sweep_value, metric, mean, se, static_cast<long>(samples.size())};
}

}  // namespace detail

/// Channel-estimation NMSE sweep (correlation method + threshold baseline).
/// Axis: pilot SNR, or time-slot count N at cfg.fixed_snr_db.
inline SweepResult chest_sweep(const SimConfig& cfg) {
  cfg.validate();
  require(cfg.axis == SweepAxis::kSnrP || cfg.axis == SweepAxis::kNSlots,
          "chest_sweep: sweep axis must be snr_p or n_slots");
  SweepResult res;
  res.sweep_name = cfg.axis == SweepAxis::kSnrP ? "snr_p_db" : "n_slots";
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    double point = cfg.points[p];
    SimConfig pc = cfg;
    double snr_p_db = cfg.axis == SweepAxis::kSnrP ? point : cfg.fixed_snr_db;
    if (cfg.axis == SweepAxis::kNSlots) {
      pc.N = static_cast<int>(point);
      // Doppler resolution changes with N; re-derive the physical window.
      pc.estimator.K_max = EstimatorConfig::from_profile(
                               pc.geometry(), pc.profile.delay_spread_us() * 1e-6,
                               pc.profile.nu_max_hz(pc.geometry()))
                               .K_max;
      pc.estimator.validate(pc.geometry());
    }
    FrameGeometry g = pc.geometry();
    double E_p = pilot_energy_for_snr(g, snr_p_db, pc.N0);
    PilotSpec pilot = pc.pilot(E_p);
    Vec x_p = make_pilot_frame(pilot, g).vec();
    int P = static_cast<int>(pc.profile.path_count());
    double sigma = std::sqrt(pc.N0);
    EstimatorConfig tm_cfg = pc.tm_config();

    struct TrialOut {
      double corr = 0, tm = 0;
    };
    auto run = [&](int t) {
      auto rng = make_rng(trial_seed(cfg.seed, p, static_cast<std::size_t>(t)));
      PathSet truth = draw_channel(pc.profile, g, rng);
      Vec y = apply_channel(truth, g, x_p) + complex_gaussian(rng, g.MN(), pc.N0);
      TrialOut o;
      EstimationReport corr = estimate_channel(g, y, pilot, pc.estimator, P);
      o.corr = nmse_ratio_paths(g, truth, corr.paths);
      EstimationReport tm = threshold_estimate(g, y, pilot, 3.0 * sigma, tm_cfg);
      o.tm = nmse_ratio_paths(g, truth, tm.paths);
      return o;
    };
    auto outs = parallel_trials<TrialOut>(pc.trials, pc.threads, run);
    std::vector<double> corr_r, tm_r;
    for (const auto& o : outs) {
      corr_r.push_back(o.corr);
      tm_r.push_back(o.tm);
    }
    res.rows.push_back(detail::nmse_row(point, "nmse_corr_db", corr_r));
    res.rows.push_back(detail::nmse_row(point, "nmse_tm_db", tm_r));
  }
  return res;
}

enum class CsiMode { kPerfect, kThreshold, kCorrFnn };

/// One BER/iteration trial: a channel draw plus frames_per_trial data frames,
/// equalized by IMFC (and LMMSE for perfect CSI). Imperfect-CSI modes first
/// estimate the channel from a dedicated pilot frame whose pilot SNR equals
/// the data SNR E_s/N0.
struct BerTrialOut {
  long bits = 0;
  long err_imfc = 0;
  long err_lmmse = 0;
  double iters_sum = 0;
  int frames = 0;
};

inline BerTrialOut ber_trial(const SimConfig& cfg, const FrameGeometry& g,
                             double N0, double eps, std::uint64_t seed, CsiMode csi,
                             bool with_lmmse, const FnnModel* fnn) {
  auto rng = make_rng(seed);
  const Constellation con(cfg.constellation_order);
  const int MN = g.MN();
  PathSet truth = draw_channel(cfg.profile, g, rng);
  DdChannelOperator H_true(g, truth);

  // Channel knowledge used by the equalizer.
  PathSet csi_paths = truth;
  if (csi != CsiMode::kPerfect) {
    double snr_p_db = linear_to_db(1.0 / N0);  // SNR_p = SNR_d = E_s/N0, E_s = 1
    double E_p = pilot_energy_for_snr(g, snr_p_db, N0);
    PilotSpec pilot = cfg.pilot(E_p);
    Vec x_p = make_pilot_frame(pilot, g).vec();
    Vec y_p = H_true.forward(x_p) + complex_gaussian(rng, MN, N0);
    if (csi == CsiMode::kThreshold) {
      csi_paths = threshold_estimate(g, y_p, pilot, 3.0 * std::sqrt(N0), cfg.tm_config()).paths;
    } else {
      require(fnn != nullptr, "ber_trial: FNN CSI mode requires a loaded model");
      int P_hat = estimate_P(fnn_forward(*fnn, y_p.cwiseAbs()), fnn->classes);
      csi_paths = estimate_channel(g, y_p, pilot, cfg.estimator, P_hat).paths;
    }
  }
  if (csi_paths.empty())  // degenerate estimate: fall back to a null-like path
    csi_paths.paths.emplace_back(cxd(1e-12, 0), 0.0, 0.0);
  DdChannelOperator H_csi(g, csi_paths);

  EqualizerConfig eq = cfg.equalizer;
  eq.epsilon = eps;
  EqualizerConfig eq_safe = eq;
  eq_safe.safe_mode = true;
  std::unique_ptr<LmmseSolver> lmmse;
  if (with_lmmse)  // factor once per channel draw; reused across frames
    lmmse = std::make_unique<LmmseSolver>(operator_matrix(H_csi), 1.0 / N0);

  std::uniform_int_distribution<int> bit(0, 1);
  BerTrialOut o;
  for (int f = 0; f < cfg.frames_per_trial; ++f) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(MN) * con.bits_per_symbol());
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
    Vec x = con.map(bits);
    Vec y = H_true.forward(x) + complex_gaussian(rng, MN, N0);
    DetectionResult dr;
    int aborted_iters = 0;
    if (eq.safe_mode) {
      dr = imfc_equalize(y, H_csi, eq);
    } else {
      // rho(H^H H) exceeds 2 for many normalized multipath draws, so the
      // nominal step can trip the divergence guard; retry with the safe step.
      // The aborted attempt's iterations still count toward the frame cost.
      try {
        dr = imfc_equalize(y, H_csi, eq);
      } catch (const ImfcDivergence& d) {
        aborted_iters = d.iterations;
        dr = imfc_equalize(y, H_csi, eq_safe);
      }
    }
    auto hd = ml_detect(dr.x_hat, con);
    for (std::size_t i = 0; i < bits.size(); ++i) o.err_imfc += bits[i] != hd.bits[i];
    if (with_lmmse) {
      Vec x_l = lmmse->equalize(y);  // SNR_d = E_s/N0, E_s = 1
      auto hl = ml_detect(x_l, con);
      for (std::size_t i = 0; i < bits.size(); ++i) o.err_lmmse += bits[i] != hl.bits[i];
    }
    o.bits += static_cast<long>(bits.size());
    o.iters_sum += dr.iterations + aborted_iters;
    ++o.frames;
  }
  return o;
}

/// BER sweep. Axis: E_b/N0 in dB, or the normalized residual threshold
/// epsilon/sqrt(MN sigma^2) at E_b/N0 = cfg.fixed_snr_db.
/// csi selects the channel knowledge; LMMSE rows are emitted for perfect CSI.
inline SweepResult ber_sweep(const SimConfig& cfg, CsiMode csi = CsiMode::kPerfect,
                             const FnnModel* fnn = nullptr) {
  cfg.validate();
  require(cfg.axis == SweepAxis::kEbN0 || cfg.axis == SweepAxis::kEpsilon,
          "ber_sweep: sweep axis must be ebn0 or epsilon");
  FrameGeometry g = cfg.geometry();
  const Constellation con(cfg.constellation_order);
  const std::string tag = csi == CsiMode::kPerfect ? "perfect"
                          : csi == CsiMode::kThreshold ? "tm" : "cmfnn";
  SweepResult res;
  res.sweep_name = cfg.axis == SweepAxis::kEbN0 ? "ebn0_db" : "epsilon_norm";
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    double point = cfg.points[p];
    double ebn0_db = cfg.axis == SweepAxis::kEbN0 ? point : cfg.fixed_snr_db;
    // E_s = 1 (unit-energy constellation): N0 = 1/(log2(Q) * Eb/N0).
    double N0 = 1.0 / (con.bits_per_symbol() * db_to_linear(ebn0_db));
    double eps_scale = cfg.axis == SweepAxis::kEpsilon ? point : cfg.epsilon_scale;
    double eps = eps_scale * std::sqrt(g.MN() * N0);
    bool with_lmmse = csi == CsiMode::kPerfect;
    auto run = [&](int t) {
      return ber_trial(cfg, g, N0, eps, trial_seed(cfg.seed, p, static_cast<std::size_t>(t)),
                       csi, with_lmmse, fnn);
    };
    auto outs = parallel_trials<BerTrialOut>(cfg.trials, cfg.threads, run);
    long bits = 0, err_imfc = 0, err_lmmse = 0;
    std::vector<double> iters;
    for (const auto& o : outs) {
      bits += o.bits;
      err_imfc += o.err_imfc;
      err_lmmse += o.err_lmmse;
      iters.push_back(o.iters_sum / o.frames);
    }
    auto ber_row = [&](const std::string& metric, long err) {
      double pb = static_cast<double>(err) / static_cast<double>(bits);
      double se = std::sqrt(std::max(pb * (1.0 - pb), 0.0) / static_cast<double>(bits));
      return MetricRow{point, metric, pb, se, static_cast<long>(bits)};
    };
    res.rows.push_back(ber_row("ber_imfc_" + tag, err_imfc));
    if (with_lmmse) res.rows.push_back(ber_row("ber_lmmse_perfect", err_lmmse));
    res.rows.push_back(detail::plain_row(point, "iters_imfc_" + tag, iters));
  }
  return res;
}

/// Paper-reported CRLB reference values for the single-target scenario
/// (d = 300 m, v = 70 km/h, M = N = 32), at SNR_rad = 0,5,10,15,20 dB.
/// Emitted as a static reference column, not computed.
inline const std::vector<std::pair<double, std::pair<double, double>>>&
sensing_crlb_reference() {
  static const std::vector<std::pair<double, std::pair<double, double>>> ref = {
      {0.0, {2.03565073990067, 0.0916496608676246}},
      {5.0, {1.14644942341252, 0.0515558960163395}},
      {10.0, {0.642741110556078, 0.0288712360318711}},
      {15.0, {0.362448006332245, 0.0162747944520075}},
      {20.0, {0.204338722886295, 0.00916766949039323}},
  };
  return ref;
}

/// Radar sensing sweep over SNR_rad: single target, unit-magnitude gain with
/// random phase, 4-QAM data frame known at the receiver. RMSE aggregates
/// squared errors before the root.
inline SweepResult sensing_sweep(const SimConfig& cfg) {
  cfg.validate();
  require(cfg.axis == SweepAxis::kSnrRad, "sensing_sweep: sweep axis must be snr_rad");
  FrameGeometry g = cfg.geometry();
  require(g.f_c > 0, "sensing_sweep: carrier frequency must be set");
  const Constellation con(cfg.constellation_order);
  const double d_true = cfg.target_range_m;
  const double v_true = cfg.target_velocity_kmh / 3.6;
  const double tau = 2.0 * d_true / kSpeedOfLight;
  const double nu = 2.0 * v_true * g.f_c / kSpeedOfLight;
  const double l_true = tau / g.delay_res();
  const double k_true = nu / g.doppler_res();
  require(l_true <= cfg.estimator.L_max && std::abs(k_true) <= cfg.estimator.K_max,
          "sensing_sweep: target outside the configured search window");
  SweepResult res;
  res.sweep_name = "snr_rad_db";
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    double point = cfg.points[p];
    double N0 = db_to_linear(-point);  // SNR_rad = |g|^2/N0 with |g| = 1
    struct TrialOut {
      double se_d = 0, se_v = 0;
    };
    auto run = [&](int t) {
      auto rng = make_rng(trial_seed(cfg.seed, p, static_cast<std::size_t>(t)));
      std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
      cxd gain = std::exp(cxd(0, uni(rng)));
      std::uniform_int_distribution<int> bit(0, 1);
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.MN()) * con.bits_per_symbol());
      for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
      Vec x = con.map(bits);
      Vec y = gain * apply_t(g, l_true, k_true, x) + complex_gaussian(rng, g.MN(), N0);
      auto targets = sense_targets(g, y, x, cfg.estimator, 1);
      TrialOut o;
      o.se_d = (targets[0].range_m - d_true) * (targets[0].range_m - d_true);
      o.se_v = (targets[0].velocity_ms - v_true) * (targets[0].velocity_ms - v_true);
      return o;
    };
    auto outs = parallel_trials<TrialOut>(cfg.trials, cfg.threads, run);
    double mse_d = 0, mse_v = 0;
    for (const auto& o : outs) {
      mse_d += o.se_d;
      mse_v += o.se_v;
    }
    mse_d /= static_cast<double>(outs.size());
    mse_v /= static_cast<double>(outs.size());
    res.rows.push_back(MetricRow{point, "rmse_range_m", std::sqrt(mse_d), 0.0,
                                 static_cast<long>(outs.size())});
    res.rows.push_back(MetricRow{point, "rmse_velocity_ms", std::sqrt(mse_v), 0.0,
                                 static_cast<long>(outs.size())});
    for (const auto& [snr, rv] : sensing_crlb_reference()) {
      if (std::abs(snr - point) < 1e-9) {
        res.rows.push_back(MetricRow{point, "crlb_range_m_paper_ref", rv.first, 0.0, 0});
        res.rows.push_back(MetricRow{point, "crlb_velocity_ms_paper_ref", rv.second, 0.0, 0});
      }
    }
  }
  return res;
}

/// Path-count detection sweep over pilot SNR: mean estimated P for the FNN
/// detector (when a model is supplied) and the stopping-criterion baseline.
inline SweepResult detect_eval(const SimConfig& cfg, const FnnModel* fnn) {
  cfg.validate();
  require(cfg.axis == SweepAxis::kSnrP, "detect_eval: sweep axis must be snr_p");
  FrameGeometry g = cfg.geometry();
  if (fnn) require(fnn->input_dim() == g.MN(), "detect_eval: model/grid size mismatch");
  SweepResult res;
  res.sweep_name = "snr_p_db";
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    double point = cfg.points[p];
    double E_p = pilot_energy_for_snr(g, point, cfg.N0);
    PilotSpec pilot = cfg.pilot(E_p);
    Vec x_p = make_pilot_frame(pilot, g).vec();
    double sigma = std::sqrt(cfg.N0);
    struct TrialOut {
      double p_fnn = 0, p_sc = 0;
    };
    auto run = [&](int t) {
      auto rng = make_rng(trial_seed(cfg.seed, p, static_cast<std::size_t>(t)));
      PathSet truth = draw_channel(cfg.profile, g, rng);
      Vec y = apply_channel(truth, g, x_p) + complex_gaussian(rng, g.MN(), cfg.N0);
      TrialOut o;
      o.p_sc = sc_estimate_P(g, y, pilot, cfg.estimator, sigma);
      if (fnn) o.p_fnn = estimate_P(fnn_forward(*fnn, y.cwiseAbs()), fnn->classes);
      return o;
    };
    auto outs = parallel_trials<TrialOut>(cfg.trials, cfg.threads, run);
    std::vector<double> sc_s, fnn_s;
    for (const auto& o : outs) {
      sc_s.push_back(o.p_sc);
      if (fnn) fnn_s.push_back(o.p_fnn);
    }
    res.rows.push_back(detail::plain_row(point, "mean_p_hat_sc", sc_s));
    if (fnn) res.rows.push_back(detail::plain_row(point, "mean_p_hat_fnn", fnn_s));
  }
  return res;
}

}  // namespace otfsim
