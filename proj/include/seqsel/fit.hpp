#pragma once

// Offline fitting of ESSFM nonlinear-phase filter coefficients against the
// fine split-step reference, and a persistent per-setup coefficient cache.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/essfm.hpp"
#include "seqsel/fiber.hpp"
#include "seqsel/metric.hpp"
#include "seqsel/rng.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/shaping.hpp"

namespace seqsel {

struct SimplexOptions {
  int max_evaluations = 600;
  double initial_step = 0.1;
  double f_tolerance = 1e-12;  // relative spread of simplex values
  double x_tolerance = 1e-7;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  double initial_value = 0.0;
  int evaluations = 0;
};

/// Derivative-free Nelder-Mead minimization. The returned point is the best
/// evaluated, so value <= initial_value.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, const SimplexOptions& opt = {}) {
  require(!x0.empty(), "simplex search needs at least one dimension");
  const std::size_t dim = x0.size();
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    ++res.evaluations;
    if (!std::isfinite(v)) throw std::runtime_error("optimizer divergence: non-finite objective");
    return v;
  };

  std::vector<std::vector<double>> pts{x0};
  std::vector<double> vals{eval(x0)};
  res.initial_value = vals[0];
  for (std::size_t d = 0; d < dim; ++d) {
    auto p = x0;
    p[d] += opt.initial_step * (d == 0 ? 1.0 : 0.5);
    pts.push_back(p);
    vals.push_back(eval(p));
  }

  std::vector<std::size_t> order(dim + 1);
  while (res.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];

    double size = 0.0;
    for (std::size_t i = 0; i <= dim; ++i)
      for (std::size_t d = 0; d < dim; ++d) size = std::max(size, std::abs(pts[i][d] - pts[best][d]));
    const double spread = vals[worst] - vals[best];
    if (spread <= opt.f_tolerance * (std::abs(vals[best]) + 1e-300) || size <= opt.x_tolerance) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i)
      if (i != worst)
        for (std::size_t d = 0; d < dim; ++d) centroid[d] += pts[i][d] / static_cast<double>(dim);
    auto along = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
      return p;
    };

    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < dim; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

/// Random shaped training sequences drawn from the training stream.
inline std::vector<SymbolSequence> training_sequences(const EssCodec& codec, std::size_t n, std::size_t count,
                                                      std::uint64_t master_seed, double scale) {
  require(count >= 1, "training set must be nonempty");
  std::vector<SymbolSequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_stream(master_seed, StreamTag::training, {i});
    out.push_back(bits_to_sequence(random_bits(rng, frame_bits(codec, n)), codec, n, scale));
  }
  return out;
}

struct FitResult {
  std::vector<double> coeffs;
  double mse = 0.0;          // relative to reference output energy
  double initial_mse = 0.0;  // at the starting coefficients
  int evaluations = 0;
};

/// Fits Nc coefficients for an N_st-step ESSFM to the fine SSFM output over the
/// training set. Starts from `initial` (padded or truncated to Nc) or from c = [1, 0, ...].
inline FitResult fit_coefficients(std::span<const SymbolSequence> training, const MetricSetup& setup, int n_steps,
                                  int n_coeffs, const SsfmPolicy& oracle_policy,
                                  std::optional<std::vector<double>> initial = std::nullopt,
                                  StepDistribution distribution = StepDistribution::log_spaced,
                                  SimplexOptions options = {}) {
  require(n_coeffs >= 1, "need at least one filter coefficient");
  require(n_steps >= 1, "ESSFM needs at least one step");
  if (training.empty()) throw ParameterError("training set must be nonempty");

  std::vector<SpectrumPair> inputs, refs;
  double ref_energy = 0.0;
  double fs = 0.0;
  for (const auto& seq : training) {
    const auto x = upsample_and_shape(seq, setup.samples_per_symbol, setup.pulse, setup.symbol_rate);
    fs = x.sample_rate;
    inputs.push_back(to_spectrum(x));
    auto y = to_spectrum(propagate_link(x, setup.link, oracle_policy, true, nullptr));
    for (std::size_t k = 0; k < y.size(); ++k) ref_energy += std::norm(y.x[k]) + std::norm(y.y[k]);
    refs.push_back(std::move(y));
  }

  auto mse = [&](const std::vector<double>& c) {
    const EssfmConfig cfg{n_steps, 1, c, distribution};
    double err = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      const auto out = essfm_propagate_spectrum(inputs[t], fs, 0.0, setup.link, cfg);
      for (std::size_t k = 0; k < out.size(); ++k)
        err += std::norm(out.x[k] - refs[t].x[k]) + std::norm(out.y[k] - refs[t].y[k]);
    }
    return err / ref_energy;
  };

  std::vector<double> start(static_cast<std::size_t>(n_coeffs), 0.0);
  start[0] = 1.0;
  if (initial) {
    for (std::size_t i = 0; i < start.size(); ++i) start[i] = i < initial->size() ? (*initial)[i] : 0.0;
  }
  const auto r = nelder_mead(mse, start, options);
  return {r.x, r.value, r.initial_value, r.evaluations};
}

// ---------------------------------------------------------------------------

/// FNV-1a over a canonical text rendering of everything the coefficients depend on.
inline std::uint64_t setup_hash(const MetricSetup& setup, std::size_t n_symbols, StepDistribution distribution) {
  char buf[512];
  const auto& f = setup.link.fiber;
  std::snprintf(buf, sizeof buf, "%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%zu|%d", setup.link.spans,
                f.alpha_db_km, f.beta2_ps2_km, f.gamma_w_km, f.length_km, setup.link.center_wavelength_nm,
                setup.symbol_rate, setup.samples_per_symbol, setup.pulse.rolloff, n_symbols,
                static_cast<int>(distribution));
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ULL;
  }
  return h;
}

struct CoefficientKey {
  std::uint64_t link_hash = 0;
  int n_steps = 1;
  int n_coeffs = 1;
  double power_dbm = 0.0;

  friend bool operator<(const CoefficientKey& a, const CoefficientKey& b) {
    return std::tie(a.link_hash, a.n_steps, a.n_coeffs, a.power_dbm) <
           std::tie(b.link_hash, b.n_steps, b.n_coeffs, b.power_dbm);
  }
};

/// Text cache, one record per line:
///   # seqsel-coeff-cache v1
///   <hash hex> <N_st> <Nc> <power dBm> c_0 ... c_{Nc-1}
/// Populated before a sweep; concurrent const lookups are safe afterwards.
class CoefficientCache {
 public:
  static constexpr const char* kHeader = "# seqsel-coeff-cache v1";

  const std::vector<double>* find(const CoefficientKey& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void put(const CoefficientKey& key, std::vector<double> coeffs) {
    require(coeffs.size() == static_cast<std::size_t>(key.n_coeffs), "coefficient count does not match key");
    entries_[key] = std::move(coeffs);
  }

  std::size_t size() const noexcept { return entries_.size(); }

  static CoefficientCache load(const std::string& path) {
    CoefficientCache cache;
    std::ifstream in(path);
    if (!in) return cache;
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw ParameterError("coefficient cache: unknown format in " + path);
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string hash_hex;
      CoefficientKey key;
      if (!(ss >> hash_hex >> key.n_steps >> key.n_coeffs >> key.power_dbm) || key.n_coeffs < 1)
        throw ParameterError("coefficient cache: malformed record at line " + std::to_string(lineno));
      key.link_hash = std::stoull(hash_hex, nullptr, 16);
      std::vector<double> c(static_cast<std::size_t>(key.n_coeffs));
      for (auto& v : c)
        if (!(ss >> v)) throw ParameterError("coefficient cache: short record at line " + std::to_string(lineno));
      cache.entries_[key] = std::move(c);
    }
    return cache;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write coefficient cache " + path);
    out << kHeader << '\n';
    char buf[64];
    for (const auto& [key, c] : entries_) {
      std::snprintf(buf, sizeof buf, "%016" PRIx64, key.link_hash);
      out << buf << ' ' << key.n_steps << ' ' << key.n_coeffs << ' ';
      std::snprintf(buf, sizeof buf, "%.17g", key.power_dbm);
      out << buf;
      for (double v : c) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        out << buf;
      }
      out << '\n';
    }
  }

 private:
  std::map<CoefficientKey, std::vector<double>> entries_;
};

}  // namespace seqsel
