#pragma once

/**
 * @file dd_operator.hpp
 * @brief Unitary delay-Doppler operator algebra.
 *
 * Core objects, acting on length-MN vectors (column-major vec of an M x N
 * delay-Doppler grid, index q = m + n*M):
 *
 *   D^a    = diag(z^{qa}),  z = exp(j*2*pi/(MN))   (fractional powers allowed)
 *   Q(a)   = (F_N (x) I_M) * D^a * F_MN^H * (F_N (x) I_M)
 *   T(l,k) = Q(k) * conj(Q(l))
 *   H_DD   = sum_i g_i * T(l_i, k_i)
 *
 * with identity (rectangular) pulse shaping, so every Q and T is unitary.
 * Fast application uses FFT structure: (F_N (x) I_M) is a length-N DFT along
 * the Doppler axis of the M x N grid, and F_MN is a length-MN DFT. A dense
 * construction built from the circulant closed form of the delay-time channel
 * is provided as an independent oracle and as LMMSE input.
 */

#include <vector>

#include "otfsim/common.hpp"
#include "otfsim/fft.hpp"
#include "otfsim/frame.hpp"

namespace otfsim {

enum class QMode {
  kForward,    ///< Q(a) v
  kAdjoint,    ///< Q(a)^H v
  kConjugate,  ///< conj(Q(a)) v
  kTranspose   ///< Q(a)^T v  (the conjugate-adjoint)
};

namespace detail {

/// In-place (F_N (x) I_M) v or its inverse: length-N unitary DFT along the
/// Doppler axis (stride-M slices) of the column-major M x N grid.
inline void apply_a(const FrameGeometry& g, Vec& v, bool inverse) {
  require(v.size() == g.MN(), "apply_a: vector length must be M*N");
  if (g.N == 1) return;
  std::vector<cxd> row(static_cast<std::size_t>(g.N));
  for (int m = 0; m < g.M; ++m) {
    for (int n = 0; n < g.N; ++n) row[static_cast<std::size_t>(n)] = v[m + n * g.M];
    dft_unitary(row.data(), row.size(), inverse);
    for (int n = 0; n < g.N; ++n) v[m + n * g.M] = row[static_cast<std::size_t>(n)];
  }
}

/// In-place length-MN unitary DFT (F_MN) or its inverse.
inline void apply_f(const FrameGeometry& g, Vec& v, bool inverse) {
  require(v.size() == g.MN(), "apply_f: vector length must be M*N");
  dft_unitary(v.data(), static_cast<std::size_t>(v.size()), inverse);
}

/// In-place multiplication by D^a = diag(exp(j*2*pi*q*a/MN)) or its conjugate.
inline void apply_phase(const FrameGeometry& g, double a, Vec& v, bool conjugate) {
  const int MN = g.MN();
  const double w = 2.0 * kPi * a / MN * (conjugate ? -1.0 : 1.0);
  for (int q = 0; q < MN; ++q) v[q] *= cxd(std::cos(w * q), std::sin(w * q));
}

}  // namespace detail

/// Apply the mode-selected variant of Q(a) to v. Since F_N and F_MN are
/// symmetric, conj(Q) = Q^H with the phase conjugated in place of the order
/// swap; the four compositions below match the dense definition.
inline Vec apply_q(const FrameGeometry& g, double a, const Vec& v, QMode mode) {
  require(std::isfinite(a), "apply_q: parameter a must be finite");
  require(v.size() == g.MN(), "apply_q: vector length must be M*N");
  Vec t = v;
  switch (mode) {
    case QMode::kForward:  // A D^a F^H A
      detail::apply_a(g, t, false);
      detail::apply_f(g, t, true);
      detail::apply_phase(g, a, t, false);
      detail::apply_a(g, t, false);
      break;
    case QMode::kAdjoint:  // A^H (D^a)^H-weighted F A^H
      detail::apply_a(g, t, true);
      detail::apply_phase(g, a, t, true);
      detail::apply_f(g, t, false);
      detail::apply_a(g, t, true);
      break;
    case QMode::kConjugate:  // A^H F conj(D^a) A^H   (A* = A^H)
      detail::apply_a(g, t, true);
      detail::apply_f(g, t, false);
      detail::apply_phase(g, a, t, true);
      detail::apply_a(g, t, true);
      break;
    case QMode::kTranspose:  // A D^a F^H-last A
      detail::apply_a(g, t, false);
      detail::apply_phase(g, a, t, false);
      detail::apply_f(g, t, true);
      detail::apply_a(g, t, false);
      break;
  }
  return t;
}

/// T(l,k) v = Q(k) conj(Q(l)) v; adjoint: T^H v = Q(l)^T Q(k)^H v.
inline Vec apply_t(const FrameGeometry& g, double l, double k, const Vec& v,
                   bool adjoint = false) {
  require(v.size() == g.MN(), "apply_t: vector length must be M*N");
  if (!adjoint) {
    return apply_q(g, k, apply_q(g, l, v, QMode::kConjugate), QMode::kForward);
  }
  return apply_q(g, l, apply_q(g, k, v, QMode::kAdjoint), QMode::kTranspose);
}

/// Dirichlet kernel sum S(x) = sum_{r=0}^{MN-1} exp(j*2*pi*r*x/MN).
/// Equals MN at integer multiples of MN and the closed-form geometric ratio
/// otherwise; this is the cross-correlation of two fractional shifts.
inline cxd dirichlet_sum(double x, int MN) {
  double r = std::remainder(x, static_cast<double>(MN));
  if (std::abs(r) < 1e-9) return cxd(MN, 0);
  cxd num = 1.0 - std::exp(cxd(0, 2.0 * kPi * x));
  cxd den = 1.0 - std::exp(cxd(0, 2.0 * kPi * x / MN));
  return num / den;
}

/// Frobenius inner product <H_a, H_b>_F = tr(H_b^H H_a) of two path-sum
/// channels over the same geometry, in closed form:
///   tr(T_j^H T_i) = S(l_j - l_i) * S(k_i - k_j) / MN.
/// O(P_a * P_b) — no dense matrices needed for NMSE evaluation.
inline cxd channel_frobenius_inner(const FrameGeometry& g, const PathSet& a,
                                   const PathSet& b) {
  const int MN = g.MN();
  cxd tot(0, 0);
  for (const auto& pi : a.paths) {
    for (const auto& pj : b.paths) {
      tot += pi.gain * std::conj(pj.gain) * dirichlet_sum(pj.l - pi.l, MN) *
             dirichlet_sum(pi.k - pj.k, MN) / static_cast<double>(MN);
    }
  }
  return tot;
}

/**
 * Composite DD channel operator H_DD = sum_i g_i T(l_i, k_i).
 * Immutable after construction; forward/adjoint applications are pure.
 */
class DdChannelOperator {
 public:
  DdChannelOperator(FrameGeometry geom, PathSet paths)
      : geom_(geom), paths_(std::move(paths)) {
    require(!paths_.empty(), "DdChannelOperator: path set must be non-empty");
  }

  const FrameGeometry& geometry() const { return geom_; }
  const PathSet& paths() const { return paths_; }

  Vec forward(const Vec& x) const {
    require(x.size() == geom_.MN(), "DdChannelOperator: vector length must be M*N");
    Vec y = Vec::Zero(geom_.MN());
    for (const auto& p : paths_.paths) y += p.gain * apply_t(geom_, p.l, p.k, x);
    return y;
  }

  /// Adjoint H^H x = sum_i conj(g_i) T_i^H x — the matched-filter combiner.
  Vec adjoint(const Vec& x) const {
    require(x.size() == geom_.MN(), "DdChannelOperator: vector length must be M*N");
    Vec y = Vec::Zero(geom_.MN());
    for (const auto& p : paths_.paths)
      y += std::conj(p.gain) * apply_t(geom_, p.l, p.k, x, /*adjoint=*/true);
    return y;
  }

 private:
  FrameGeometry geom_;
  PathSet paths_;
};

/// Materialize the delay-Doppler channel matrix column by column through the
/// fast operator. Intended for solvers that need a dense matrix (e.g. LMMSE);
/// the independent closed-form construction lives in dense_channel_matrix.
inline Mat operator_matrix(const DdChannelOperator& op) {
  const int MN = op.geometry().MN();
  Mat H(MN, MN);
  Vec e = Vec::Zero(MN);
  for (int j = 0; j < MN; ++j) {
    e[j] = 1.0;
    H.col(j) = op.forward(e);
    e[j] = 0.0;
  }
  return H;
}

enum class ChannelDomain { kDelayTime, kDelayDoppler };

namespace detail {

/// Dense unitary DFT matrix of size n.
inline Mat dense_dft(int n) {
  Mat F(n, n);
  double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      double ang = -2.0 * kPi * static_cast<double>(p) * q / n;
      F(p, q) = s * cxd(std::cos(ang), std::sin(ang));
    }
  return F;
}

/// Dense F_N (x) I_M.
inline Mat dense_a(const FrameGeometry& g) {
  Mat FN = dense_dft(g.N);
  Mat A = Mat::Zero(g.MN(), g.MN());
  for (int r = 0; r < g.N; ++r)
    for (int c = 0; c < g.N; ++c)
      A.block(r * g.M, c * g.M, g.M, g.M) = FN(r, c) * Mat::Identity(g.M, g.M);
  return A;
}

}  // namespace detail

/**
 * Materialize the channel matrix, either in the delay-time domain
 * (H = sum_i g_i D^{k_i} C(l_i), where C(l) is the circulant with first
 * column c[p] = S(p - l)/MN), or in the delay-Doppler domain
 * (H_DD = A H A^H with A = F_N (x) I_M). Independent of the FFT fast path.
 */
inline Mat dense_channel_matrix(const PathSet& paths, const FrameGeometry& g,
                                ChannelDomain domain) {
  require(!paths.empty(), "dense_channel_matrix: path set must be non-empty");
  const int MN = g.MN();
  require(MN <= 8192, "dense_channel_matrix: MN exceeds the 8192 dense-size guard");
  Mat H = Mat::Zero(MN, MN);
  for (const auto& p : paths.paths) {
    // First column of the circulant delay factor C(l).
    Vec c0(MN);
    for (int q = 0; q < MN; ++q)
      c0[q] = dirichlet_sum(static_cast<double>(q) - p.l, MN) / static_cast<double>(MN);
    for (int col = 0; col < MN; ++col)
      for (int row = 0; row < MN; ++row) {
        double ang = 2.0 * kPi * p.k * row / MN;  // D^{k} diagonal phase
        H(row, col) += p.gain * cxd(std::cos(ang), std::sin(ang)) * c0[(row - col + MN) % MN];
      }
  }
  if (domain == ChannelDomain::kDelayTime) return H;
  Mat A = detail::dense_a(g);
  return A * H * A.adjoint();
}

}  // namespace otfsim
