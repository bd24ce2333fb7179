#pragma once

// Sequence-level NLI metric ||x - y||^2 evaluated in the frequency domain, and
// the real-multiplication cost of evaluating it.

#include <cmath>
#include <variant>

#include "seqsel/errors.hpp"
#include "seqsel/essfm.hpp"
#include "seqsel/fiber.hpp"
#include "seqsel/pulse.hpp"
#include "seqsel/sequence.hpp"
#include "seqsel/signal.hpp"

namespace seqsel {

struct MetricValue {
  double value = 0.0;

  friend bool operator<(MetricValue a, MetricValue b) { return a.value < b.value; }
  friend bool operator==(MetricValue a, MetricValue b) { return a.value == b.value; }
};

/// (1/K) sum |X - Y|^2 over both polarizations; equals the time-domain ||x - y||^2.
inline MetricValue nli_metric(const SpectrumPair& xf, const SpectrumPair& yf) {
  if (xf.x.size() != yf.x.size() || xf.y.size() != yf.y.size() || xf.x.size() != xf.y.size())
    throw ParameterError("nli_metric: spectrum length mismatch");
  require(!xf.x.empty(), "empty signal");
  double acc = 0.0;
  for (std::size_t k = 0; k < xf.size(); ++k) acc += std::norm(xf.x[k] - yf.x[k]) + std::norm(xf.y[k] - yf.y[k]);
  return {acc / static_cast<double>(xf.size())};
}

struct CostModelInput {
  double n_tested = 1;         // N_t
  double samples_per_symbol = 1;  // n_sxs
  double samples = 1;          // N
  double n_steps = 1;          // N_st
  double n_subbands = 1;       // N_sb
};

/// Real multiplications per transmitted 2D symbol for N_t metric evaluations.
inline double cost_rm_per_2d(const CostModelInput& in) {
  if (!(in.n_tested > 0 && in.samples_per_symbol > 0 && in.samples > 0 && in.n_steps > 0 && in.n_subbands > 0))
    throw ParameterError("cost model inputs must all be positive");
  const double nt = in.n_tested, sxs = in.samples_per_symbol, n = in.samples, st = in.n_steps, sb = in.n_subbands;
  const double bracket = 5.0 * st * std::log2(n / sb) + 2.0 * std::log2(n) + st * (3.0 * sb + 1.0) / 2.0 +
                         (20.0 * sb * st + 8.0) / n + 4.0;
  return nt * sxs / 2.0 * bracket;
}

/// Fine split-step reference propagation used as the ideal metric.
struct IdealSsfm {
  SsfmPolicy policy;
};

using MetricEngine = std::variant<EssfmConfig, IdealSsfm>;

/// Everything fixed across candidates of one experiment.
struct MetricSetup {
  LinkConfig link;
  double symbol_rate = 46.5e9;
  double samples_per_symbol = 1.125;
  double launch_power_w = 1e-3;
  PulseShape pulse;

  static MetricSetup make(const LinkConfig& link, double symbol_rate, double sps, double rolloff, double power_w,
                          std::size_t n_symbols) {
    MetricSetup s{link, symbol_rate, sps, power_w, {}};
    const int span = static_cast<int>(std::max<std::size_t>(n_symbols, 2));
    s.pulse = rrc_taps(rolloff, span, sps);
    return s;
  }

  /// Nominal 4D symbol energy in sample-sum units.
  double symbol_energy() const { return launch_power_w * samples_per_symbol; }
};

namespace detail {

/// Rotates each polarization of y by -arg(sum Y conj(X)).
inline void align_mean_phase(const SpectrumPair& xf, SpectrumPair& yf) {
  auto align = [](const CVec& ref, CVec& v) {
    cplx corr{};
    for (std::size_t k = 0; k < v.size(); ++k) corr += v[k] * std::conj(ref[k]);
    if (corr == cplx{}) return;
    const cplx rot = std::conj(corr) / std::abs(corr);
    for (auto& s : v) s = cmul(s, rot);
  };
  align(xf.x, yf.x);
  align(xf.y, yf.y);
}

inline void compensate_dispersion(SpectrumPair& sp, double sample_rate, double center_offset, const LinkConfig& link) {
  const auto h = linear_operator(sp.size(), sample_rate, center_offset, link.fiber.beta2_s2_m(), 0.0,
                                 -link.total_length_m(), 0.0);
  apply_operator(sp, h);
}

}  // namespace detail

/// Received spectrum of a noiseless single-channel emulation, dispersion-compensated
/// and phase-aligned to the transmitted spectrum.
inline SpectrumPair emulate_received(const SpectrumPair& xf, double sample_rate, const MetricSetup& setup,
                                     const MetricEngine& engine) {
  SpectrumPair yf;
  if (const auto* ess = std::get_if<EssfmConfig>(&engine)) {
    yf = essfm_propagate_spectrum(xf, sample_rate, 0.0, setup.link, *ess, -setup.link.total_length_m());
  } else {
    const auto& ideal = std::get<IdealSsfm>(engine);
    auto y = propagate_link(from_spectrum(xf, sample_rate), setup.link, ideal.policy, true, nullptr);
    yf = to_spectrum(y);
    detail::compensate_dispersion(yf, sample_rate, 0.0, setup.link);
  }
  detail::align_mean_phase(xf, yf);
  return yf;
}

/// Metric of one candidate, normalized to unit mean symbol energy.
inline MetricValue metric_for_candidate(const SymbolSequence& candidate, const MetricSetup& setup,
                                        const MetricEngine& engine) {
  const auto x = upsample_and_shape(candidate, setup.samples_per_symbol, setup.pulse, setup.symbol_rate);
  const auto xf = to_spectrum(x);
  const auto yf = emulate_received(xf, x.sample_rate, setup, engine);
  return {nli_metric(xf, yf).value / setup.symbol_energy()};
}

}  // namespace seqsel
