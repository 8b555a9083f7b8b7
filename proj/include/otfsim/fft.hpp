#pragma once

/**
 * @file fft.hpp
 * @brief Unitary DFT helpers used by the delay-Doppler operator algebra.
 *
 * Radix-2 iterative FFT for power-of-two lengths with a naive O(n^2) DFT
 * fallback for other sizes (only small grids hit the fallback). All
 * transforms are unitary (scaled by 1/sqrt(n)) so that F^H F = I.
 */

#include <unordered_map>
#include <vector>

#include "otfsim/common.hpp"

namespace otfsim::detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Per-thread twiddle cache; tables are immutable once built.
inline const std::vector<cxd>& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<cxd>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<cxd> w(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) {
      double ang = -2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
      w[i] = cxd(std::cos(ang), std::sin(ang));
    }
    it = cache.emplace(n, std::move(w)).first;
  }
  return it->second;
}

inline void fft_pow2(cxd* a, std::size_t n, bool inverse) {
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        cxd tw = w[k * step];
        if (inverse) tw = std::conj(tw);
        cxd u = a[i + k];
        cxd v = a[i + k + len / 2] * tw;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

inline void dft_naive(cxd* a, std::size_t n, bool inverse) {
  std::vector<cxd> out(n, cxd(0, 0));
  double sign = inverse ? 1.0 : -1.0;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      double ang = sign * 2.0 * kPi * static_cast<double>(p * q % n) /
                   static_cast<double>(n);
      out[p] += a[q] * cxd(std::cos(ang), std::sin(ang));
    }
  }
  std::copy(out.begin(), out.end(), a);
}

}  // namespace otfsim::detail

namespace otfsim {

/// In-place unitary DFT of length n on contiguous data.
/// forward: y = F x with F[p,q] = exp(-j2πpq/n)/sqrt(n); inverse: y = F^H x.
inline void dft_unitary(cxd* a, std::size_t n, bool inverse) {
  if (n <= 1) return;
  if (detail::is_pow2(n)) {
    detail::fft_pow2(a, n, inverse);
  } else {
    detail::dft_naive(a, n, inverse);
  }
  double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) a[i] *= scale;
}

inline void dft_unitary(Vec& v, bool inverse) {
  dft_unitary(v.data(), static_cast<std::size_t>(v.size()), inverse);
}

}  // namespace otfsim
