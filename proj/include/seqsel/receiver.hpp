#pragma once

// Coherent receiver for the central WDM channel and mismatched-decoding AIR.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/fiber.hpp"
#include "seqsel/pulse.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/signal.hpp"

namespace seqsel {

/// Per-polarization symbol vectors.
struct SymbolPair {
  CVec x;
  CVec y;
};

/// Exact inverse of the link's accumulated chromatic dispersion (all-pass).
inline DualPolSignal cdc(const DualPolSignal& signal, const LinkConfig& link) {
  signal.validate();
  link.validate();
  auto sp = to_spectrum(signal);
  detail::compensate_dispersion(sp, signal.sample_rate, signal.center_offset, link);
  return from_spectrum(sp, signal.sample_rate, signal.center_offset);
}

/// Brick-wall selection of |f| <= channel_bw / 2 and ideal resampling to `out_rate`.
/// Field values are preserved (band-limited interpolation), so power is unchanged.
inline DualPolSignal demux_central(const DualPolSignal& composite, double spacing, double channel_bw,
                                   double out_rate) {
  composite.validate();
  require(spacing > 0.0 && channel_bw > 0.0, "spacing and channel bandwidth must be positive");
  if (channel_bw > composite.sample_rate) throw ParameterError("channel bandwidth exceeds composite bandwidth");
  require(out_rate >= channel_bw, "output rate cannot represent the channel bandwidth");
  require(out_rate <= composite.sample_rate, "demux cannot upsample");

  const std::size_t kin = composite.size();
  const double kout_real = static_cast<double>(kin) * out_rate / composite.sample_rate;
  const auto kout = static_cast<std::size_t>(std::llround(kout_real));
  require(std::abs(kout_real - static_cast<double>(kout)) < 1e-6 && kout >= 1,
          "output rate must give an integer sample count");

  const auto in = to_spectrum(composite);
  SpectrumPair out{CVec(kout), CVec(kout)};
  const double bin = composite.sample_rate / static_cast<double>(kin);
  const double gain = static_cast<double>(kout) / static_cast<double>(kin);
  const double half_bw = 0.5 * channel_bw * (1.0 + 1e-12);
  for (std::size_t k = 0; k < kin; ++k) {
    const long sb = signed_bin(k, kin);
    if (std::abs(static_cast<double>(sb) * bin) > half_bw) continue;
    long dst = sb % static_cast<long>(kout);
    if (dst < 0) dst += static_cast<long>(kout);
    out.x[static_cast<std::size_t>(dst)] += in.x[k] * gain;
    out.y[static_cast<std::size_t>(dst)] += in.y[k] * gain;
  }
  return from_spectrum(out, out_rate, composite.center_offset);
}

namespace detail {

inline CVec matched_integer(const CVec& sig, std::size_t sps, const std::vector<double>& taps, std::size_t n) {
  const auto len = static_cast<long>(sig.size());
  const long half = static_cast<long>(taps.size() / 2);
  CVec out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{};
    const long base = static_cast<long>(k * sps);
    for (long m = -half; m <= half; ++m) {
      long idx = (base + m) % len;
      if (idx < 0) idx += len;
      acc += sig[static_cast<std::size_t>(idx)] * taps[static_cast<std::size_t>(m + half)];
    }
    out[k] = acc;
  }
  return out;
}

inline CVec matched_fractional(const CVec& sig, double sps, double rolloff, std::size_t n) {
  const std::size_t len = sig.size();
  const CVec spec = fft_forward(sig);
  CVec folded(n);
  const double gain = 1.0 / std::sqrt(sps) * static_cast<double>(n) / static_cast<double>(len) * sps;
  for (std::size_t m = 0; m < len; ++m) {
    const long sm = signed_bin(m, len);
    const double h = rrc_spectrum(rolloff, static_cast<double>(sm) / static_cast<double>(n));
    if (h == 0.0) continue;
    long q = sm % static_cast<long>(n);
    if (q < 0) q += static_cast<long>(n);
    folded[static_cast<std::size_t>(q)] += spec[m] * (gain * h);
  }
  fft_plan(n).inverse(folded);
  return folded;
}

}  // namespace detail

/// Matched filter (time-reversed conjugate pulse) sampled at the n symbol instants.
inline SymbolPair matched_filter_downsample(const DualPolSignal& signal, const PulseShape& pulse, double sps,
                                            std::size_t n) {
  signal.validate();
  detail::check_shaping_args(sps, pulse);
  require(n >= 1, "need at least one symbol");
  if (signal.size() != detail::block_samples(n, sps))
    throw ParameterError("matched filter: signal length does not cover n symbols");
  if (detail::is_integer_rate(sps)) {
    const auto r = static_cast<std::size_t>(std::round(sps));
    return {detail::matched_integer(signal.x, r, pulse.taps, n), detail::matched_integer(signal.y, r, pulse.taps, n)};
  }
  return {detail::matched_fractional(signal.x, sps, pulse.rolloff, n),
          detail::matched_fractional(signal.y, sps, pulse.rolloff, n)};
}

/// theta = arg(sum y conj(x)); returns y e^{-j theta}. Zero correlation leaves y unchanged.
inline CVec mean_phase_removal(std::span<const cplx> x, std::span<const cplx> y, double* theta_out = nullptr) {
  require(x.size() == y.size(), "mean phase removal: length mismatch");
  cplx corr{};
  for (std::size_t i = 0; i < x.size(); ++i) corr += y[i] * std::conj(x[i]);
  const double theta = corr == cplx{} ? 0.0 : std::arg(corr);
  if (theta_out) *theta_out = theta;
  const cplx rot = std::polar(1.0, -theta);
  CVec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * rot;
  return out;
}

inline SymbolPair mean_phase_removal(const SymbolPair& x, const SymbolPair& y) {
  return {mean_phase_removal(x.x, y.x), mean_phase_removal(x.y, y.y)};
}

/// Input distribution over square-QAM points.
struct QamPrior {
  CVec points;
  std::vector<double> probs;

  /// Points +-a_I +- j a_Q with P = p(|a_I|)/2 * p(|a_Q|)/2.
  static QamPrior from_amplitudes(const std::vector<int>& amplitudes, const std::vector<double>& amp_probs) {
    require(amplitudes.size() == amp_probs.size(), "amplitude distribution size mismatch");
    QamPrior q;
    for (std::size_t i = 0; i < amplitudes.size(); ++i)
      for (int si : {1, -1})
        for (std::size_t j = 0; j < amplitudes.size(); ++j)
          for (int sj : {1, -1}) {
            q.points.emplace_back(si * amplitudes[i], sj * amplitudes[j]);
            q.probs.push_back(0.25 * amp_probs[i] * amp_probs[j]);
          }
    return q;
  }

  static QamPrior uniform_qam64() { return from_amplitudes({1, 3, 5, 7}, {0.25, 0.25, 0.25, 0.25}); }

  double mean_energy() const {
    double e = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      e += probs[i] * std::norm(points[i]);
      mass += probs[i];
    }
    return e / mass;
  }

  double entropy_bits() const {
    double mass = 0.0;
    for (double p : probs) mass += p;
    double h = 0.0;
    for (double p : probs)
      if (p > 0.0) h -= p / mass * std::log2(p / mass);
    return h;
  }
};

struct AirReport {
  double air_bits_per_2d = 0.0;
  double air_bits_per_4d = 0.0;
  double fitted_noise_var = 0.0;
  double se_bits_s_hz = 0.0;
};

/// Memoryless circular-Gaussian mismatched decoder with fitted variance.
/// x must lie on a common positive scaling of the prior's grid; the scale is
/// recovered from x, so the estimate is invariant to scaling x and y together.
inline AirReport air_mismatched_gaussian(std::span<const cplx> x, std::span<const cplx> y, const QamPrior& prior) {
  require(x.size() == y.size(), "AIR: length mismatch");
  require(x.size() >= 100, "AIR: need at least 100 symbols to fit the noise variance");
  require(prior.points.size() == prior.probs.size() && !prior.points.empty(), "AIR: malformed prior");
  double mass = 0.0;
  for (double p : prior.probs) {
    require(p >= 0.0, "AIR: negative prior mass");
    mass += p;
  }
  if (!(mass > 0.0)) throw ParameterError("AIR: degenerate prior");

  const std::size_t m = prior.points.size();
  std::vector<double> log_prior(m);
  for (std::size_t a = 0; a < m; ++a)
    log_prior[a] = prior.probs[a] > 0.0 ? std::log(prior.probs[a] / mass) : -std::numeric_limits<double>::infinity();

  // grid scale: energy estimate, then least squares against hard decisions
  double ex = 0.0;
  for (auto v : x) ex += std::norm(v);
  ex /= static_cast<double>(x.size());
  require(ex > 0.0, "AIR: transmitted symbols are all zero");
  const double s0 = std::sqrt(ex / prior.mean_energy());
  double num = 0.0, den = 0.0;
  for (auto v : x) {
    const cplx u = v / s0;
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      const double d = std::norm(u - prior.points[a]);
      if (d < bd) { bd = d; best = a; }
    }
    num += (v * std::conj(prior.points[best])).real();
    den += std::norm(prior.points[best]);
  }
  const double scale = num / den;

  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) var += std::norm((y[i] - x[i]) / scale);
  var = std::max(var / static_cast<double>(x.size()), 1e-12);

  double acc = 0.0;
  std::vector<double> terms(m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx xs = x[i] / scale, ys = y[i] / scale;
    const double own = -std::norm(ys - xs) / var;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      terms[a] = log_prior[a] - std::norm(ys - prior.points[a]) / var;
      top = std::max(top, terms[a]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    acc += own - (top + std::log(sum));
  }
  const double bits = acc / static_cast<double>(x.size()) / std::numbers::ln2;
  AirReport r;
  r.air_bits_per_2d = std::clamp(bits, 0.0, std::log2(static_cast<double>(m)));
  r.air_bits_per_4d = 2.0 * r.air_bits_per_2d;
  r.fitted_noise_var = var * scale * scale;
  return r;
}

/// Dual-polarization convenience: pools both polarizations as 2D samples.
inline AirReport air_mismatched_gaussian(const SymbolPair& x, const SymbolPair& y, const QamPrior& prior) {
  CVec xs(x.x), ys(y.x);
  xs.insert(xs.end(), x.y.begin(), x.y.end());
  ys.insert(ys.end(), y.y.begin(), y.y.end());
  return air_mismatched_gaussian(xs, ys, prior);
}

/// SE in bit/s/Hz: net rate minus the AIR shortfall (2 H(prior) - AIR_4D), times R_s / spacing.
inline double spectral_efficiency(const RateLedger& ledger, double air_bits_per_4d, double entropy_bits_per_4d,
                                  double symbol_rate, double spacing) {
  require(symbol_rate > 0.0 && spacing > 0.0, "symbol rate and spacing must be positive");
  const double shortfall = entropy_bits_per_4d - air_bits_per_4d;
  return (ledger.net_bits_per_4d - shortfall) * symbol_rate / spacing;
}

}  // namespace seqsel
