#pragma once

// Enhanced SSFM: few-step split-step engine whose nonlinear phase is a
// symmetric FIR-filtered version of the instantaneous power. Linear steps are
// pure dispersion; the span loss/gain profile enters only through the
// per-step effective lengths.

#include <cmath>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/fiber.hpp"
#include "seqsel/signal.hpp"

namespace seqsel {

struct EssfmConfig {
  int n_steps = 1;
  int n_subbands = 1;
  std::vector<double> coeffs{1.0};  // c_0 .. c_{Nc-1}, one-sided
  StepDistribution step_distribution = StepDistribution::log_spaced;

  void validate() const {
    require(n_steps >= 1, "ESSFM needs at least one step");
    require(n_subbands >= 1, "ESSFM subband count must be positive");
    require(!coeffs.empty(), "ESSFM needs at least one filter coefficient");
    for (double c : coeffs) require(std::isfinite(c), "ESSFM coefficients must be finite");
  }
};

namespace detail {

struct ProfileMoments {
  double mass = 0.0;   // integral of p(z)
  double moment = 0.0; // integral of z p(z)
};

/// Moments of the normalized power profile p(z) = exp(-alpha (z mod L)) over [a, b].
inline ProfileMoments profile_moments(double a, double b, double span_len, double alpha) {
  ProfileMoments out;
  if (b <= a) return out;
  auto first = static_cast<long>(std::floor(a / span_len));
  for (long s = std::max(0L, first);; ++s) {
    const double s0 = static_cast<double>(s) * span_len;
    if (s0 >= b) break;
    const double lo = std::max(a, s0), hi = std::min(b, s0 + span_len);
    if (hi > lo) {
      const double u1 = lo - s0, u2 = hi - s0;
      if (alpha == 0.0) {
        out.mass += u2 - u1;
        out.moment += 0.5 * (hi * hi - lo * lo);
      } else {
        const double e1 = std::exp(-alpha * u1), e2 = std::exp(-alpha * u2);
        const double mass = (e1 - e2) / alpha;
        // integral of u exp(-alpha u) du
        const double um = (u1 / alpha + 1.0 / (alpha * alpha)) * e1 - (u2 / alpha + 1.0 / (alpha * alpha)) * e2;
        out.mass += mass;
        out.moment += s0 * mass + um;
      }
    }
  }
  return out;
}

inline std::vector<double> essfm_boundaries(const LinkConfig& link, const EssfmConfig& cfg) {
  const double span_len = link.fiber.length_m();
  const double total = link.total_length_m();
  const double alpha = link.fiber.alpha_per_m();
  const int n = cfg.n_steps;
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  if (cfg.step_distribution == StepDistribution::uniform || alpha == 0.0) {
    for (int j = 0; j <= n; ++j) z[static_cast<std::size_t>(j)] = total * j / n;
  } else {
    const double span_leff = -std::expm1(-alpha * span_len) / alpha;
    const double g_total = link.spans * span_leff;
    for (int j = 0; j <= n; ++j) {
      const double g = g_total * j / n;
      auto s = static_cast<long>(std::floor(g / span_leff));
      s = std::min<long>(s, link.spans - 1);
      const double rem = g - static_cast<double>(s) * span_leff;
      const double arg = alpha * rem;
      const double u = arg >= 1.0 ? span_len : std::min(span_len, -std::log1p(-arg) / alpha);
      z[static_cast<std::size_t>(j)] = static_cast<double>(s) * span_len + u;
    }
  }
  z.front() = 0.0;
  z.back() = total;
  return z;
}

inline SplitStepPlan essfm_plan(const LinkConfig& link, const EssfmConfig& cfg) {
  const auto z = essfm_boundaries(link, cfg);
  const double span_len = link.fiber.length_m();
  const double alpha = link.fiber.alpha_per_m();
  SplitStepPlan plan;
  double prev = 0.0;
  for (std::size_t j = 0; j + 1 < z.size(); ++j) {
    const auto mom = profile_moments(z[j], z[j + 1], span_len, alpha);
    double kick = z[j] + 0.5 * (z[j + 1] - z[j]);
    if (cfg.step_distribution == StepDistribution::log_spaced && mom.mass > 0.0) kick = mom.moment / mom.mass;
    plan.linear.push_back(kick - prev);
    plan.kick_leff.push_back(mom.mass);
    prev = kick;
  }
  plan.linear.push_back(link.total_length_m() - prev);
  plan.loss.assign(plan.linear.size(), 0.0);
  return plan;
}

inline void check_essfm(const EssfmConfig& cfg) {
  cfg.validate();
  if (cfg.n_subbands != 1) throw UnsupportedError("ESSFM propagation supports a single subband only");
}

}  // namespace detail

/// Propagated spectrum; `extra_dispersion` (m) is folded into the last linear step.
inline SpectrumPair essfm_propagate_spectrum(const SpectrumPair& input, double sample_rate, double center_offset,
                                             const LinkConfig& link, const EssfmConfig& cfg,
                                             double extra_dispersion = 0.0) {
  detail::check_essfm(cfg);
  link.validate();
  return detail::run_split_step(input, sample_rate, center_offset, link.fiber, detail::essfm_plan(link, cfg),
                                cfg.coeffs, extra_dispersion);
}

/// Whole-link ESSFM propagation; N_st steps are distributed over the link, not per span.
inline DualPolSignal essfm_propagate(const DualPolSignal& signal, const LinkConfig& link, const EssfmConfig& cfg) {
  detail::check_essfm(cfg);
  signal.validate();
  auto sp = essfm_propagate_spectrum(to_spectrum(signal), signal.sample_rate, signal.center_offset, link, cfg);
  return from_spectrum(sp, signal.sample_rate, signal.center_offset);
}

}  // namespace seqsel
