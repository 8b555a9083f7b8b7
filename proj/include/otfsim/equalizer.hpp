#pragma once

/**
 * @file equalizer.hpp
 * @brief Data detection: LMMSE benchmark and the iterative matched-filter
 * combining (IMFC) equalizer, plus ML slicing and BER accounting.
 *
 * IMFC iterates x^(n) = x^(n-1) + alpha^(n) H^H (y - H x^(n-1)) with the
 * time-decaying step alpha^(n) = alpha0 / (1 + beta*(n-1)) and stops when the
 * residual norm drops below epsilon or n_max is reached. For fixed
 * alpha < 2/rho(H^H H) the iteration converges to the zero-forcing solution;
 * "safe mode" pins alpha0 = 1/rho-hat from a power-iteration estimate and
 * disables the decay.
 */

#include <cstdint>
#include <vector>

#include "otfsim/common.hpp"
#include "otfsim/constellation.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/rng.hpp"

namespace otfsim {

struct EqualizerConfig {
  double alpha0 = 1.0;   ///< initial step size
  double beta = 0.05;    ///< step decay factor, alpha(n) = alpha0/(1+beta*(n-1))
  double epsilon = 0.0;  ///< residual-norm stop threshold
  int n_max = 50;        ///< iteration cap
  bool safe_mode = false;  ///< fixed alpha0 = 1/rho-hat, no decay
  int power_iterations = 100;  ///< safe-mode spectral-radius iterations

  void validate() const {
    require(alpha0 > 0, "EqualizerConfig: alpha0 must be positive");
    require(beta >= 0, "EqualizerConfig: beta must be non-negative");
    require(epsilon >= 0, "EqualizerConfig: epsilon must be non-negative");
    require(n_max >= 1, "EqualizerConfig: n_max must be >= 1");
  }
};

/// Residual-norm stop threshold epsilon = sqrt(MN * sigma^2) / 2, the
/// operating point balancing iteration count against BER.
inline double default_epsilon(int MN, double sigma2) {
  return std::sqrt(static_cast<double>(MN) * sigma2) / 2.0;
}

struct DetectionResult {
  Vec x_hat;
  int iterations = 0;
  double final_residual_norm = 0;
  int forward_applications = 0;  ///< channel (forward) operator applications
  int adjoint_applications = 0;  ///< matched-filter (adjoint) applications
};

/// Thrown by the IMFC divergence guard. Carries the iteration index at which
/// the residual exceeded the guard bound so callers can account for the work
/// already spent before falling back to a stable step.
class ImfcDivergence : public std::runtime_error {
 public:
  ImfcDivergence(const std::string& what, int iterations_done)
      : std::runtime_error(what), iterations(iterations_done) {}
  int iterations;
};

/// Power-iteration estimate of rho(H^H H); a lower bound converging to the
/// spectral radius, used for step-size diagnostics and safe mode.
inline double spectral_radius(const DdChannelOperator& channel, int iterations) {
  require(iterations >= 1, "spectral_radius: need at least one iteration");
  auto rng = make_rng(0x9e3779b97f4a7c15ULL);
  Vec v = complex_gaussian(rng, channel.geometry().MN());
  v /= v.norm();
  double rho = 0;
  for (int i = 0; i < iterations; ++i) {
    Vec w = channel.adjoint(channel.forward(v));
    rho = std::real(v.dot(w));  // Rayleigh quotient of the PSD operator
    double nw = w.norm();
    if (nw == 0) return 0.0;
    v = w / nw;
  }
  return rho;
}

/// LMMSE equalizer x = H^H (H H^H + I/snr_d)^{-1} y via a Hermitian (LLT)
/// factorization; no explicit inverse or pseudo-inverse is formed. The
/// factorization is done once at construction so the (expensive) Gram build
/// is amortized over every frame seen on the same channel.
class LmmseSolver {
 public:
  LmmseSolver(Mat H, double snr_d) : H_(std::move(H)) {
    require(snr_d > 0, "LmmseSolver: snr_d must be positive");
    require(H_.rows() == H_.cols(), "LmmseSolver: channel matrix must be square");
    Mat A = H_ * H_.adjoint();
    A.diagonal().array() += 1.0 / snr_d;
    llt_.compute(A);
    require(llt_.info() == Eigen::Success,
            "LmmseSolver: factorization failed (channel Gram matrix not positive "
            "definite at this regularization)");
  }

  Vec equalize(const Vec& y) const {
    require(y.size() == H_.rows(), "LmmseSolver: dimension mismatch");
    return H_.adjoint() * llt_.solve(y);
  }

 private:
  Mat H_;
  Eigen::LLT<Mat> llt_;
};

inline Vec lmmse_equalize(const Vec& y, const Mat& H, double snr_d) {
  require(H.rows() == y.size(), "lmmse_equalize: dimension mismatch");
  return LmmseSolver(H, snr_d).equalize(y);
}

/// IMFC equalizer (matrix-free): only forward/adjoint applications of the
/// channel operator are used; applications are counted in the result.
inline DetectionResult imfc_equalize(const Vec& y, const DdChannelOperator& channel,
                                     const EqualizerConfig& cfg) {
  cfg.validate();
  require(y.size() == channel.geometry().MN(), "imfc_equalize: vector length mismatch");
  DetectionResult res;
  double alpha0 = cfg.alpha0;
  double beta = cfg.beta;
  if (cfg.safe_mode) {
    double rho = spectral_radius(channel, cfg.power_iterations);
    require(rho > 0, "imfc_equalize: spectral radius estimate is zero");
    alpha0 = 1.0 / rho;
    beta = 0.0;
  }
  const double y_norm = y.norm();
  Vec x_hat = Vec::Zero(y.size());
  Vec resid = y - channel.forward(x_hat);
  ++res.forward_applications;
  int n = 0;
  while (n < cfg.n_max && resid.norm() >= cfg.epsilon) {
    ++n;
    double alpha = alpha0 / (1.0 + beta * (n - 1));
    x_hat += alpha * channel.adjoint(resid);
    ++res.adjoint_applications;
    resid = y - channel.forward(x_hat);
    ++res.forward_applications;
    if (resid.norm() > 10.0 * y_norm)
      throw ImfcDivergence(
          "imfc_equalize: residual diverged (>10x input norm); step size alpha0 "
          "likely exceeds 2/rho(H^H H) — try safe mode",
          n);
  }
  res.x_hat = std::move(x_hat);
  res.iterations = n;
  res.final_residual_norm = resid.norm();
  return res;
}

/// Symbol-by-symbol ML hard decision.
struct HardDecision {
  Vec symbols;
  std::vector<std::uint8_t> bits;
};

inline HardDecision ml_detect(const Vec& x_hat, const Constellation& con) {
  HardDecision hd;
  hd.symbols.resize(x_hat.size());
  hd.bits = con.demap(x_hat);
  for (Eigen::Index i = 0; i < x_hat.size(); ++i)
    hd.symbols[i] = con.point(con.nearest_label(x_hat[i]));
  return hd;
}

inline double ber(const std::vector<std::uint8_t>& tx, const std::vector<std::uint8_t>& rx) {
  require(tx.size() == rx.size() && !tx.empty(), "ber: bit vectors must match in length");
  std::size_t err = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) err += tx[i] != rx[i];
  return static_cast<double>(err) / static_cast<double>(tx.size());
}

}  // namespace otfsim
