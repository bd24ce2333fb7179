#pragma once

// Dual-polarization (Manakov) split-step propagation over amplified links.

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/fft.hpp"
#include "seqsel/rng.hpp"
#include "seqsel/signal.hpp"

namespace seqsel {

inline constexpr double kLightSpeed = 299792458.0;    // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kManakovFactor = 8.0 / 9.0;

/// beta2 in ps^2/km from dispersion D in ps/(nm km) at wavelength lambda.
inline double beta2_from_dispersion(double d_ps_nm_km, double wavelength_nm) {
  const double lambda = wavelength_nm * 1e-9;
  const double d_si = d_ps_nm_km * 1e-6;  // s/m^2
  return -d_si * lambda * lambda / (2.0 * std::numbers::pi * kLightSpeed) * 1e27;
}

struct FiberParams {
  double alpha_db_km = 0.2;
  double beta2_ps2_km = beta2_from_dispersion(17.0, 1550.0);
  double gamma_w_km = 1.3;
  double length_km = 100.0;

  void validate() const {
    require(length_km > 0.0, "fiber length must be positive");
    require(alpha_db_km >= 0.0, "fiber attenuation must be non-negative");
  }

  // SI views
  double alpha_per_m() const { return alpha_db_km * std::log(10.0) / 10.0 * 1e-3; }  // power
  double beta2_s2_m() const { return beta2_ps2_km * 1e-27; }
  double gamma_per_w_m() const { return gamma_w_km * 1e-3; }
  double length_m() const { return length_km * 1e3; }
  double span_loss_db() const { return alpha_db_km * length_km; }
};

struct LinkConfig {
  int spans = 1;
  FiberParams fiber;
  double edfa_noise_figure_db = 5.0;
  double center_wavelength_nm = 1550.0;

  void validate() const {
    require(spans >= 1, "link needs at least one span");
    fiber.validate();
  }

  double total_length_m() const { return spans * fiber.length_m(); }
  double carrier_hz() const { return kLightSpeed / (center_wavelength_nm * 1e-9); }
};

enum class StepDistribution { uniform, log_spaced };

struct SsfmPolicy {
  int steps_per_span = 100;
  StepDistribution step_distribution = StepDistribution::uniform;

  void validate() const { require(steps_per_span >= 1, "steps_per_span must be positive"); }
};

namespace detail {

/// Kick schedule: linear[i] precedes kick i, linear.back() follows the last kick.
struct SplitStepPlan {
  std::vector<double> linear;     // dispersion length, m
  std::vector<double> loss;       // attenuation length, m (0 when loss is folded elsewhere)
  std::vector<double> kick_leff;  // nonlinear effective length, m
};

/// exp(j (beta2/2) w^2 Ld - (alpha/2) Ll) on the FFT grid, w including the centre offset.
inline CVec linear_operator(std::size_t size, double sample_rate, double center_offset, double beta2,
                            double alpha, double disp_len, double loss_len) {
  CVec h(size);
  const double amp = std::exp(-0.5 * alpha * loss_len);
  for (std::size_t k = 0; k < size; ++k) {
    const double f = static_cast<double>(signed_bin(k, size)) * sample_rate / static_cast<double>(size) +
                     center_offset;
    const double w = 2.0 * std::numbers::pi * f;
    const double ph = 0.5 * beta2 * w * w * disp_len;
    h[k] = {amp * std::cos(ph), amp * std::sin(ph)};
  }
  return h;
}

inline void apply_operator(SpectrumPair& sp, const CVec& h) {
  for (std::size_t k = 0; k < sp.size(); ++k) {
    sp.x[k] = cmul(sp.x[k], h[k]);
    sp.y[k] = cmul(sp.y[k], h[k]);
  }
}

/// Runs a kick schedule on a spectrum. `coeffs` is the symmetric nonlinear-phase
/// filter (coeffs[0] centre tap); {1.0} gives the plain pointwise Kerr phase.
/// `extra_dispersion` is appended to the final linear step only.
inline SpectrumPair run_split_step(SpectrumPair sp, double sample_rate, double center_offset,
                                   const FiberParams& fiber, const SplitStepPlan& plan,
                                   std::span<const double> coeffs, double extra_dispersion = 0.0) {
  const std::size_t size = sp.size();
  const double beta2 = fiber.beta2_s2_m();
  const double alpha = fiber.alpha_per_m();
  const double gamma = fiber.gamma_per_w_m();
  const auto& plan_fft = fft_plan(size);

  struct Cached {
    double disp, loss;
    CVec h;
  };
  std::vector<Cached> cache;
  auto op = [&](double disp, double loss) -> const CVec& {
    for (const auto& c : cache)
      if (c.disp == disp && c.loss == loss) return c.h;
    cache.push_back({disp, loss, linear_operator(size, sample_rate, center_offset, beta2, alpha, disp, loss)});
    return cache.back().h;
  };

  std::vector<double> power(size), phase(size);
  const auto taps = static_cast<long>(coeffs.size());
  for (std::size_t i = 0; i < plan.kick_leff.size(); ++i) {
    if (plan.linear[i] != 0.0 || plan.loss[i] != 0.0) apply_operator(sp, op(plan.linear[i], plan.loss[i]));
    plan_fft.inverse(sp.x);
    plan_fft.inverse(sp.y);
    const double k = kManakovFactor * gamma * plan.kick_leff[i];
    for (std::size_t j = 0; j < size; ++j) power[j] = std::norm(sp.x[j]) + std::norm(sp.y[j]);
    if (taps == 1) {
      const double c0 = coeffs[0];
      for (std::size_t j = 0; j < size; ++j) phase[j] = k * (c0 * power[j]);
    } else {
      const auto n = static_cast<long>(size);
      for (long j = 0; j < n; ++j) {
        double acc = coeffs[0] * power[static_cast<std::size_t>(j)];
        for (long t = 1; t < taps; ++t) {
          long lo = (j - t) % n, hi = (j + t) % n;
          if (lo < 0) lo += n;
          acc += coeffs[static_cast<std::size_t>(t)] *
                 (power[static_cast<std::size_t>(lo)] + power[static_cast<std::size_t>(hi)]);
        }
        phase[static_cast<std::size_t>(j)] = k * acc;
      }
    }
    for (std::size_t j = 0; j < size; ++j) {
      const cplx rot{std::cos(phase[j]), std::sin(phase[j])};
      sp.x[j] = cmul(sp.x[j], rot);
      sp.y[j] = cmul(sp.y[j], rot);
    }
    plan_fft.forward(sp.x);
    plan_fft.forward(sp.y);
  }
  const double last_disp = plan.linear.back() + extra_dispersion;
  const double last_loss = plan.loss.back();
  if (last_disp != 0.0 || last_loss != 0.0) apply_operator(sp, op(last_disp, last_loss));
  return sp;
}

/// Effective length referred to a step's midpoint power: 2 sinh(alpha h / 2) / alpha.
inline double midpoint_effective_length(double alpha, double h) {
  return alpha > 0.0 ? 2.0 * std::sinh(0.5 * alpha * h) / alpha : h;
}

/// Step boundaries within one span, [0, L] inclusive.
inline std::vector<double> span_boundaries(const FiberParams& fiber, const SsfmPolicy& policy) {
  const int steps = policy.steps_per_span;
  const double len = fiber.length_m();
  const double alpha = fiber.alpha_per_m();
  std::vector<double> z(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) {
    if (policy.step_distribution == StepDistribution::uniform || alpha == 0.0) {
      z[static_cast<std::size_t>(j)] = len * j / steps;
    } else {
      const double total = -std::expm1(-alpha * len) / alpha;
      const double g = total * j / steps;
      z[static_cast<std::size_t>(j)] = -std::log1p(-alpha * g) / alpha;
    }
  }
  z.back() = len;
  return z;
}

/// Strang schedule for one lossy span: kick at each step midpoint.
inline SplitStepPlan ssfm_span_plan(const FiberParams& fiber, const SsfmPolicy& policy) {
  const auto z = span_boundaries(fiber, policy);
  const double alpha = fiber.alpha_per_m();
  SplitStepPlan plan;
  double prev = 0.0;
  for (std::size_t j = 0; j + 1 < z.size(); ++j) {
    const double h = z[j + 1] - z[j];
    const double mid = z[j] + 0.5 * h;
    plan.linear.push_back(mid - prev);
    plan.kick_leff.push_back(midpoint_effective_length(alpha, h));
    prev = mid;
  }
  plan.linear.push_back(z.back() - prev);
  plan.loss = plan.linear;
  return plan;
}

}  // namespace detail

/// One fiber span by symmetrized split-step integration of the Manakov equation.
inline DualPolSignal ssfm_span(const DualPolSignal& signal, const FiberParams& fiber, const SsfmPolicy& policy) {
  signal.validate();
  fiber.validate();
  policy.validate();
  const double unit[1] = {1.0};
  auto sp = detail::run_split_step(to_spectrum(signal), signal.sample_rate, signal.center_offset, fiber,
                                   detail::ssfm_span_plan(fiber, policy), unit);
  return from_spectrum(sp, signal.sample_rate, signal.center_offset);
}

/// Amplifier: field scaled by sqrt(G); ASE per polarization has PSD (h nu / 2)(G F - 1).
inline DualPolSignal edfa(const DualPolSignal& signal, double gain_db, double nf_db, double carrier_hz,
                          Rng* rng, bool noiseless) {
  signal.validate();
  require(gain_db >= 0.0, "amplifier gain must be non-negative");
  DualPolSignal out = signal;
  const double g = std::pow(10.0, gain_db / 10.0);
  const double amp = std::sqrt(g);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.x[i] *= amp;
    out.y[i] *= amp;
  }
  if (noiseless) return out;
  require(rng != nullptr, "noisy amplifier needs a random stream");
  const double f = std::pow(10.0, nf_db / 10.0);
  const double psd = 0.5 * kPlanck * carrier_hz * std::max(0.0, g * f - 1.0);
  const double sigma = std::sqrt(0.5 * psd * signal.sample_rate);  // per quadrature
  std::normal_distribution<double> gauss(0.0, sigma);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.x[i] += cplx{gauss(*rng), gauss(*rng)};
    out.y[i] += cplx{gauss(*rng), gauss(*rng)};
  }
  return out;
}

/// Added ASE power per polarization for a given amplifier and bandwidth (W).
inline double ase_power_per_pol(double gain_db, double nf_db, double carrier_hz, double bandwidth) {
  const double g = std::pow(10.0, gain_db / 10.0);
  const double f = std::pow(10.0, nf_db / 10.0);
  return 0.5 * kPlanck * carrier_hz * (g * f - 1.0) * bandwidth;
}

/// spans x (ssfm_span + loss-compensating amplifier).
inline DualPolSignal propagate_link(const DualPolSignal& signal, const LinkConfig& link, const SsfmPolicy& policy,
                                    bool noiseless, Rng* rng) {
  link.validate();
  DualPolSignal cur = signal;
  for (int s = 0; s < link.spans; ++s) {
    cur = ssfm_span(cur, link.fiber, policy);
    cur = edfa(cur, link.fiber.span_loss_db(), link.edfa_noise_figure_db, link.carrier_hz(), rng, noiseless);
  }
  return cur;
}

}  // namespace seqsel
