#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/fft.hpp"

namespace seqsel {

/// Sampled dual-polarization field. Samples are in sqrt(W): |x|^2 + |y|^2 is instantaneous power.
struct DualPolSignal {
  CVec x;
  CVec y;
  double sample_rate = 1.0;    // Hz
  double center_offset = 0.0;  // Hz, carrier of the grid's DC bin relative to the reference carrier

  std::size_t size() const noexcept { return x.size(); }

  void validate() const {
    require(!x.empty(), "empty signal");
    require(x.size() == y.size(), "polarization lengths differ");
    require(sample_rate > 0.0, "sample rate must be positive");
  }

  /// Mean of |x|^2 + |y|^2 over samples (W).
  double mean_power() const { return sample_sum_energy() / static_cast<double>(size()); }

  /// Physical energy in J (sample sum divided by sample rate).
  double energy() const { return sample_sum_energy() / sample_rate; }

  /// Sum of |x|^2 + |y|^2 over all samples.
  double sample_sum_energy() const {
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) e += std::norm(x[i]) + std::norm(y[i]);
    return e;
  }
};

inline DualPolSignal make_signal(CVec x, CVec y, double sample_rate, double center_offset = 0.0) {
  DualPolSignal s{std::move(x), std::move(y), sample_rate, center_offset};
  s.validate();
  return s;
}

/// Frequency axis description of a signal block.
struct SpectralGrid {
  std::size_t fft_size = 1;
  double bin_spacing = 1.0;  // Hz

  static SpectralGrid of(const DualPolSignal& s) {
    s.validate();
    return {s.size(), s.sample_rate / static_cast<double>(s.size())};
  }

  double frequency(std::size_t bin) const { return static_cast<double>(signed_bin(bin, fft_size)) * bin_spacing; }

  /// Nearest frequency that is an integer number of bins; shifts on this grid stay periodic.
  double snap(double freq) const { return std::round(freq / bin_spacing) * bin_spacing; }
};

/// Pair of per-polarization spectra on a common grid.
struct SpectrumPair {
  CVec x;
  CVec y;
  std::size_t size() const noexcept { return x.size(); }
};

inline SpectrumPair to_spectrum(const DualPolSignal& s) {
  s.validate();
  return {fft_forward(s.x), fft_forward(s.y)};
}

inline DualPolSignal from_spectrum(const SpectrumPair& sp, double sample_rate, double center_offset = 0.0) {
  return make_signal(fft_inverse(sp.x), fft_inverse(sp.y), sample_rate, center_offset);
}

/// Multiplies both polarizations by exp(j 2 pi offset t). Energy is preserved exactly.
inline DualPolSignal frequency_shift(const DualPolSignal& in, double offset) {
  in.validate();
  require(std::abs(offset) < in.sample_rate / 2.0, "frequency offset beyond Nyquist");
  DualPolSignal out = in;
  if (offset == 0.0) return out;
  const double step = 2.0 * std::numbers::pi * offset / in.sample_rate;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double ph = step * static_cast<double>(i);
    const cplx rot{std::cos(ph), std::sin(ph)};
    out.x[i] = detail::cmul(in.x[i], rot);
    out.y[i] = detail::cmul(in.y[i], rot);
  }
  return out;
}

/// Offset of channel k out of `count`, centred on zero: (k - (count-1)/2) * spacing.
inline double channel_offset(std::size_t k, std::size_t count, double spacing) {
  return (static_cast<double>(k) - 0.5 * static_cast<double>(count - 1)) * spacing;
}

/// Sums channels after shifting channel k to channel_offset(k, n, spacing).
inline DualPolSignal wdm_multiplex(std::span<const DualPolSignal> channels, double spacing) {
  require(!channels.empty(), "no channels to multiplex");
  const auto& ref = channels.front();
  ref.validate();
  for (const auto& ch : channels) {
    ch.validate();
    if (ch.size() != ref.size() || ch.sample_rate != ref.sample_rate)
      throw ParameterError("wdm_multiplex: channels differ in length or sample rate");
  }
  const double span = static_cast<double>(channels.size() - 1) * spacing;
  require(span < ref.sample_rate, "wdm_multiplex: composite sample rate too low for channel span");

  DualPolSignal out{CVec(ref.size()), CVec(ref.size()), ref.sample_rate, ref.center_offset};
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const auto shifted = frequency_shift(channels[k], channel_offset(k, channels.size(), spacing));
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.x[i] += shifted.x[i];
      out.y[i] += shifted.y[i];
    }
  }
  return out;
}

}  // namespace seqsel
