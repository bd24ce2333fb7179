#pragma once

// Root-raised-cosine pulse and linear modulation onto a sampled waveform.
//
// Integer samples-per-symbol shaping is a circular convolution with the sampled
// taps. Fractional rates (e.g. 1.125) use ideal band-limited construction in the
// frequency domain from the analytic RRC spectrum, so a block of n symbols maps
// to exactly round(n * sps) samples.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/fft.hpp"
#include "seqsel/sequence.hpp"
#include "seqsel/signal.hpp"

namespace seqsel {

struct PulseShape {
  double rolloff = 0.0;
  int span_symbols = 0;
  double sps = 1.0;
  std::vector<double> taps;  // odd length, centred

  std::size_t center() const noexcept { return taps.size() / 2; }
};

/// Continuous RRC impulse response for symbol period T = 1 (unit energy).
inline double rrc_impulse(double rolloff, double t) {
  const double pi = std::numbers::pi;
  const double b = rolloff;
  if (t == 0.0) return 1.0 - b + 4.0 * b / pi;
  if (b > 0.0 && std::abs(4.0 * b * std::abs(t) - 1.0) < 1e-12) {
    const double a = pi / (4.0 * b);
    return b / std::numbers::sqrt2 * ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
  }
  const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
  const double den = pi * t * (1.0 - 16.0 * b * b * t * t);
  return num / den;
}

/// Magnitude of the RRC spectrum at normalized frequency nu (cycles per symbol); H(0) = 1.
inline double rrc_spectrum(double rolloff, double nu) {
  const double f = std::abs(nu);
  const double lo = 0.5 * (1.0 - rolloff), hi = 0.5 * (1.0 + rolloff);
  if (f <= lo) return 1.0;
  if (f >= hi) return 0.0;
  return std::cos(std::numbers::pi / (2.0 * rolloff) * (f - lo));
}

inline PulseShape rrc_taps(double rolloff, int span_symbols, double sps) {
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ParameterError("rrc_taps: rolloff must lie in [0, 1]");
  require(span_symbols >= 2, "rrc_taps: span must be at least 2 symbols");
  require(sps > 1.0, "rrc_taps: samples per symbol must exceed 1");

  const auto half = static_cast<std::size_t>(std::floor(0.5 * span_symbols * sps + 1e-9));
  std::vector<double> one_side(half + 1);
  for (std::size_t m = 0; m <= half; ++m) one_side[m] = rrc_impulse(rolloff, static_cast<double>(m) / sps);

  PulseShape p{rolloff, span_symbols, sps, std::vector<double>(2 * half + 1)};
  for (std::size_t m = 0; m <= half; ++m) {
    p.taps[half + m] = one_side[m];
    p.taps[half - m] = one_side[m];
  }
  double e = 0.0;
  for (double t : p.taps) e += t * t;
  const double norm = 1.0 / std::sqrt(e);
  for (double& t : p.taps) t *= norm;
  return p;
}

namespace detail {

inline bool is_integer_rate(double sps) { return std::abs(sps - std::round(sps)) < 1e-9; }

inline std::size_t block_samples(std::size_t n, double sps) {
  const double k = static_cast<double>(n) * sps;
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-6) throw ParameterError("n * sps must be an integer sample count");
  return static_cast<std::size_t>(kr);
}

inline CVec shape_integer(std::span<const cplx> sym, std::size_t sps, const std::vector<double>& taps) {
  const std::size_t n = sym.size(), len = n * sps;
  const long half = static_cast<long>(taps.size() / 2);
  CVec out(len);
  for (std::size_t k = 0; k < n; ++k) {
    if (sym[k] == cplx{}) continue;
    const long base = static_cast<long>(k * sps);
    for (long m = -half; m <= half; ++m) {
      long idx = (base + m) % static_cast<long>(len);
      if (idx < 0) idx += static_cast<long>(len);
      out[static_cast<std::size_t>(idx)] += sym[k] * taps[static_cast<std::size_t>(m + half)];
    }
  }
  return out;
}

inline CVec shape_fractional(std::span<const cplx> sym, double sps, double rolloff) {
  const std::size_t n = sym.size(), len = block_samples(n, sps);
  const CVec s = fft_forward(sym);
  CVec spec(len);
  const double gain = static_cast<double>(len) / static_cast<double>(n) / std::sqrt(sps);
  for (std::size_t m = 0; m < len; ++m) {
    const long sm = signed_bin(m, len);
    const double h = rrc_spectrum(rolloff, static_cast<double>(sm) / static_cast<double>(n));
    if (h == 0.0) continue;
    long q = sm % static_cast<long>(n);
    if (q < 0) q += static_cast<long>(n);
    spec[m] = s[static_cast<std::size_t>(q)] * (gain * h);
  }
  fft_plan(len).inverse(spec);
  return spec;
}

inline void check_shaping_args(double sps, const PulseShape& pulse) {
  if (!(sps > 1.0)) throw ParameterError("samples per symbol must exceed 1");
  if (is_integer_rate(sps)) {
    require(std::abs(pulse.sps - sps) < 1e-12, "pulse taps were designed for a different sample rate");
  } else {
    require(sps > 1.0 + pulse.rolloff, "fractional sample rate must exceed 1 + rolloff");
  }
}

}  // namespace detail

/// Modulates both polarizations onto a circular block of round(n * sps) samples.
inline DualPolSignal upsample_and_shape(std::span<const cplx> sx, std::span<const cplx> sy, double sps,
                                        const PulseShape& pulse, double symbol_rate = 1.0) {
  detail::check_shaping_args(sps, pulse);
  require(!sx.empty() && sx.size() == sy.size(), "symbol vectors must be nonempty and of equal length");
  if (detail::is_integer_rate(sps)) {
    const auto r = static_cast<std::size_t>(std::round(sps));
    return make_signal(detail::shape_integer(sx, r, pulse.taps), detail::shape_integer(sy, r, pulse.taps),
                       symbol_rate * sps);
  }
  return make_signal(detail::shape_fractional(sx, sps, pulse.rolloff),
                     detail::shape_fractional(sy, sps, pulse.rolloff), symbol_rate * sps);
}

inline DualPolSignal upsample_and_shape(const SymbolSequence& seq, double sps, const PulseShape& pulse,
                                        double symbol_rate = 1.0) {
  return upsample_and_shape(seq.symbols_x, seq.symbols_y, sps, pulse, symbol_rate);
}

}  // namespace seqsel
