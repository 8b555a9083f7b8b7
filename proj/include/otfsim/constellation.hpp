#pragma once

/**
 * @file constellation.hpp
 * @brief Gray-coded square QAM with unit average symbol energy.
 *
 * Labeling convention (documented, fixed): a symbol carries log2(Q) bits,
 * the first half selecting the in-phase level and the second half the
 * quadrature level. Per axis, label bits are Gray-decoded to a level index i
 * and the amplitude is (sqrt(Q)-1) - 2i before normalization, so the all-zero
 * label maps to the largest positive level on both axes. For Q = 4 this gives
 * bits 00 -> (+1+j)/sqrt(2).
 */

#include <cstdint>
#include <vector>

#include "otfsim/common.hpp"

namespace otfsim {

class Constellation {
 public:
  explicit Constellation(int order) : Q_(order) {
    require(order >= 4, "Constellation: order must be >= 4");
    int m = 0;
    while ((1 << m) < order) ++m;
    require((1 << m) == order && m % 2 == 0,
            "Constellation: order must be an even power of two (square QAM)");
    bits_per_symbol_ = m;
    int side = 1 << (m / 2);
    // Average energy of the unnormalized grid: 2 * mean of odd squares.
    double e = 0;
    for (int i = 0; i < side; ++i) {
      double amp = (side - 1) - 2.0 * i;
      e += amp * amp;
    }
    double scale = 1.0 / std::sqrt(2.0 * e / side);
    points_.resize(static_cast<std::size_t>(order));
    int half = m / 2;
    for (int label = 0; label < order; ++label) {
      int li = label >> half;          // in-phase label bits (first half)
      int lq = label & (side - 1);     // quadrature label bits (second half)
      points_[static_cast<std::size_t>(label)] =
          scale * cxd(gray_amplitude(li, side), gray_amplitude(lq, side));
    }
  }

  int order() const { return Q_; }
  int bits_per_symbol() const { return bits_per_symbol_; }
  const std::vector<cxd>& points() const { return points_; }
  cxd point(int label) const { return points_[static_cast<std::size_t>(label)]; }

  /// Map a bit stream (MSB-first per symbol) to symbols; bit count must be a
  /// multiple of log2(Q).
  Vec map(const std::vector<std::uint8_t>& bits) const {
    require(bits.size() % static_cast<std::size_t>(bits_per_symbol_) == 0,
            "Constellation::map: bit count must be a multiple of log2(Q)");
    auto n_sym = static_cast<Eigen::Index>(bits.size() / bits_per_symbol_);
    Vec out(n_sym);
    for (Eigen::Index s = 0; s < n_sym; ++s) {
      int label = 0;
      for (int b = 0; b < bits_per_symbol_; ++b)
        label = (label << 1) | bits[static_cast<std::size_t>(s) * bits_per_symbol_ + b];
      out[s] = points_[static_cast<std::size_t>(label)];
    }
    return out;
  }

  /// Nearest-point label; ties resolved toward the smaller label.
  int nearest_label(cxd x) const {
    int best = 0;
    double bd = std::norm(x - points_[0]);
    for (int label = 1; label < Q_; ++label) {
      double d = std::norm(x - points_[static_cast<std::size_t>(label)]);
      if (d < bd) {
        bd = d;
        best = label;
      }
    }
    return best;
  }

  /// Hard-decision demap of each entry (symbol-by-symbol ML under AWGN).
  std::vector<std::uint8_t> demap(const Vec& x) const {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(x.size()) * bits_per_symbol_);
    for (Eigen::Index s = 0; s < x.size(); ++s) {
      int label = nearest_label(x[s]);
      for (int b = 0; b < bits_per_symbol_; ++b)
        bits[static_cast<std::size_t>(s) * bits_per_symbol_ + b] =
            static_cast<std::uint8_t>((label >> (bits_per_symbol_ - 1 - b)) & 1);
    }
    return bits;
  }

 private:
  static double gray_amplitude(int label, int side) {
    // Invert Gray code label -> level index, then place on the PAM ladder.
    int i = label;
    for (int shift = 1; shift < side; shift <<= 1) i ^= i >> shift;
    return static_cast<double>(side - 1) - 2.0 * i;
  }

  int Q_;
  int bits_per_symbol_;
  std::vector<cxd> points_;
};

}  // namespace otfsim
