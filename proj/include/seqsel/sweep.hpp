#pragma once

// Sweep over (N_t, N_st): candidate generation, metric scoring, selection,
// full noisy WDM transmission of the selected sequence, AIR/SE, and cost.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "seqsel/config.hpp"
#include "seqsel/fit.hpp"
#include "seqsel/metric.hpp"
#include "seqsel/receiver.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/shaping.hpp"
#include "seqsel/stats.hpp"

namespace seqsel {

/// Runs fn(0..count-1) on up to `workers` threads. The lowest-index exception is rethrown.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Worker count: SEQSEL_WORKERS overrides the config; 0 means hardware concurrency.
inline int resolve_workers(int configured) {
  int w = configured;
  if (const char* env = std::getenv("SEQSEL_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 0) w = static_cast<int>(v);
  }
  if (w <= 0) w = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return w;
}

struct SweepRecord {
  int n_tested = 1;
  int n_steps = 1;  // for the ideal engine: total SSFM steps over the link
  bool ideal = false;
  SelectionMode mode = SelectionMode::bs;
  double se = 0.0;
  double se_stderr = 0.0;
  double cost = 0.0;
  double mean_metric = 0.0;
  double metric_stderr = 0.0;
  double pilot_loss = 0.0;
  double bound_loss = 0.0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::vector<double> sequence_se;
  std::vector<double> sequence_metric;
};

/// One metric engine of the sweep grid.
struct GridEngine {
  int n_steps = 1;
  bool ideal = false;
  MetricEngine engine;
};

/// Everything derived once from a RunConfig.
struct SweepContext {
  RunConfig cfg;
  LinkConfig link;
  EssCodec codec;
  MetricSetup metric_setup;
  double metric_scale = 1.0;  // amplitude unit at the metric oversampling
  double sim_scale = 1.0;     // amplitude unit at the simulation oversampling
  PulseShape sim_pulse;
  PulseShape rx_pulse;
  double sim_spacing = 0.0;  // WDM spacing snapped to the simulation FFT grid
  QamPrior prior;
  double entropy_4d = 0.0;

  static SweepContext make(const RunConfig& cfg) {
    validate(cfg);
    const auto alphabet = AmplitudeAlphabet::qam64();
    EssCodec codec = cfg.max_energy > 0
                         ? EssCodec::from_config({cfg.block_len, cfg.max_energy, cfg.bits_per_block}, alphabet)
                         : EssCodec::with_rate(cfg.block_len, alphabet, cfg.bits_per_block);
    SweepContext c{cfg, cfg.link(), std::move(codec), {}, 1.0, 1.0, {}, {}, 0.0, {}, 0.0};
    const auto n = static_cast<std::size_t>(cfg.n);
    c.metric_setup = MetricSetup::make(c.link, cfg.symbol_rate, cfg.n_sxs, cfg.rolloff, cfg.launch_power_w(), n);
    c.metric_scale = amplitude_scale(c.codec, c.metric_setup.symbol_energy());
    c.sim_scale = amplitude_scale(c.codec, cfg.launch_power_w() * cfg.sim_sps);
    c.sim_pulse = rrc_taps(cfg.rolloff, cfg.n, cfg.sim_sps);
    c.rx_pulse = rrc_taps(cfg.rolloff, cfg.n, 2.0);
    const double bin = cfg.symbol_rate / static_cast<double>(cfg.n);
    c.sim_spacing = std::round(cfg.spacing / bin) * bin;
    c.prior = QamPrior::from_amplitudes(c.codec.alphabet().amplitudes, c.codec.amplitude_distribution());
    c.entropy_4d = 2.0 * c.prior.entropy_bits();
    return c;
  }

  double accept_fraction(int n_tested) const { return cfg.eta > 0.0 ? cfg.eta : 1.0 / n_tested; }
};

/// Cost-model input of a grid point.
inline CostModelInput cost_input(const RunConfig& cfg, int n_tested, int n_steps) {
  return {static_cast<double>(n_tested), cfg.n_sxs, std::round(cfg.n * cfg.n_sxs), static_cast<double>(n_steps), 1.0};
}

inline CoefficientKey coefficient_key(const SweepContext& ctx, int n_steps) {
  return {setup_hash(ctx.metric_setup, static_cast<std::size_t>(ctx.cfg.n), ctx.cfg.step_distribution), n_steps,
          ctx.cfg.essfm_taps, ctx.cfg.launch_power_dbm};
}

/// Fits and stores any coefficient sets the sweep needs but the cache lacks.
/// Nc = 1 with fitting disabled uses the plain unit tap and needs no entry.
inline std::size_t prepare_coefficients(const SweepContext& ctx, CoefficientCache& cache) {
  const auto& cfg = ctx.cfg;
  if (!cfg.fit) return 0;
  std::size_t fitted = 0;
  std::optional<std::vector<SymbolSequence>> train;
  for (int nst : cfg.nst_list) {
    const auto key = coefficient_key(ctx, nst);
    if (cache.find(key)) continue;
    if (!train)
      train = training_sequences(ctx.codec, static_cast<std::size_t>(cfg.n),
                                 static_cast<std::size_t>(cfg.training_sequences), cfg.master_seed, ctx.metric_scale);
    const auto r = fit_coefficients(*train, ctx.metric_setup, nst, cfg.essfm_taps,
                                    SsfmPolicy{cfg.ideal_steps_per_span, StepDistribution::uniform}, std::nullopt,
                                    cfg.step_distribution);
    cache.put(key, r.coeffs);
    ++fitted;
  }
  return fitted;
}

/// Engines in record order: configured N_st values, then the ideal reference.
inline std::vector<GridEngine> grid_engines(const SweepContext& ctx, const CoefficientCache& cache) {
  const auto& cfg = ctx.cfg;
  std::vector<GridEngine> out;
  for (int nst : cfg.nst_list) {
    std::vector<double> coeffs(1, 1.0);
    if (cfg.fit) {
      const auto* c = cache.find(coefficient_key(ctx, nst));
      if (!c) throw std::runtime_error("missing fitted coefficients for N_st = " + std::to_string(nst));
      coeffs = *c;
    } else if (const auto* c = cache.find(coefficient_key(ctx, nst))) {
      coeffs = *c;
    } else if (cfg.essfm_taps != 1) {
      coeffs.assign(static_cast<std::size_t>(cfg.essfm_taps), 0.0);
      coeffs[0] = 1.0;
    }
    out.push_back({nst, false, EssfmConfig{nst, 1, coeffs, cfg.step_distribution}});
  }
  if (cfg.ideal_ssfm)
    out.push_back({cfg.spans * cfg.ideal_steps_per_span, true,
                   IdealSsfm{SsfmPolicy{cfg.ideal_steps_per_span, StepDistribution::uniform}}});
  return out;
}

/// Candidates for sequence s. BS: scrambled versions of one info block.
/// Bound: N_t independent random sequences (the population member i is shared across N_t).
inline std::vector<SymbolSequence> sequence_candidates(const SweepContext& ctx, int n_tested, std::size_t s) {
  const auto n = static_cast<std::size_t>(ctx.cfg.n);
  const auto seed = ctx.cfg.master_seed;
  if (ctx.cfg.mode == SelectionMode::bs) {
    auto rng = make_stream(seed, StreamTag::info_bits, {s});
    const auto info = random_bits(rng, frame_bits(ctx.codec, n) - static_cast<std::size_t>(pilot_bit_count(n_tested)));
    return bs_candidates(info, static_cast<std::uint64_t>(n_tested), seed, ctx.codec, n, ctx.metric_scale);
  }
  std::vector<SymbolSequence> out;
  for (int i = 0; i < n_tested; ++i) {
    auto rng = make_stream(seed, StreamTag::population, {s, static_cast<std::uint64_t>(i)});
    auto seq = bits_to_sequence(random_bits(rng, frame_bits(ctx.codec, n)), ctx.codec, n, ctx.metric_scale);
    seq.scramble_index = static_cast<std::uint64_t>(i);
    out.push_back(std::move(seq));
  }
  return out;
}

struct TransmissionResult {
  double air_bits_per_4d = 0.0;
  double noise_var = 0.0;
};

/// Full noisy WDM link for sequence s with `seq` on the centre channel.
/// Neighbour data and ASE depend only on (master_seed, s).
inline TransmissionResult transmit(const SweepContext& ctx, const SymbolSequence& seq, std::size_t s) {
  const auto& cfg = ctx.cfg;
  const auto n = static_cast<std::size_t>(cfg.n);
  const double rescale = ctx.sim_scale / seq.scale;
  const auto centre = static_cast<std::size_t>(cfg.num_channels / 2);
  std::vector<DualPolSignal> channels;
  CVec tx_x, tx_y;
  for (std::size_t ch = 0; ch < static_cast<std::size_t>(cfg.num_channels); ++ch) {
    CVec sx, sy;
    if (ch == centre) {
      sx = seq.symbols_x;
      sy = seq.symbols_y;
      for (auto& v : sx) v *= rescale;
      for (auto& v : sy) v *= rescale;
      tx_x = sx;
      tx_y = sy;
    } else {
      auto rng = make_stream(cfg.master_seed, StreamTag::wdm_neighbor, {s, ch});
      const auto other = bits_to_sequence(random_bits(rng, frame_bits(ctx.codec, n)), ctx.codec, n, ctx.sim_scale);
      sx = other.symbols_x;
      sy = other.symbols_y;
    }
    channels.push_back(upsample_and_shape(sx, sy, cfg.sim_sps, ctx.sim_pulse, cfg.symbol_rate));
  }
  const auto composite = wdm_multiplex(channels, ctx.sim_spacing);
  auto ase = make_stream(cfg.master_seed, StreamTag::ase_noise, {s});
  const auto rx = cdc(propagate_link(composite, ctx.link, SsfmPolicy{cfg.channel_steps_per_span}, false, &ase), ctx.link);
  auto central = demux_central(rx, ctx.sim_spacing, (1.0 + cfg.rolloff) * cfg.symbol_rate, 2.0 * cfg.symbol_rate);
  const double gain = std::sqrt(cfg.sim_sps / 2.0);
  for (auto& v : central.x) v *= gain;
  for (auto& v : central.y) v *= gain;
  const auto sym = matched_filter_downsample(central, ctx.rx_pulse, 2.0, n);
  const SymbolPair tx{tx_x, tx_y};
  const auto aligned = mean_phase_removal(tx, SymbolPair{sym.x, sym.y});
  const auto air = air_mismatched_gaussian(tx, aligned, ctx.prior);
  return {air.air_bits_per_4d, air.fitted_noise_var};
}

/// Transmission results shared between grid points: the same transmitted
/// sequence gives the same result wherever it is selected.
class TransmissionMemo {
 public:
  using Key = std::tuple<int, std::size_t, std::uint64_t>;  // (N_t or 0 for bound, sequence, candidate)

  std::optional<TransmissionResult> find(const Key& k) const {
    std::lock_guard lock(mu_);
    const auto it = map_.find(k);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(const Key& k, const TransmissionResult& r) {
    std::lock_guard lock(mu_);
    map_.emplace(k, r);
  }

 private:
  mutable std::mutex mu_;
  std::map<Key, TransmissionResult> map_;
};

/// One (N_t, engine) grid point. Deterministic for any worker count.
inline SweepRecord run_grid_point(const SweepContext& ctx, const GridEngine& engine, int n_tested, int workers,
                                  TransmissionMemo* memo = nullptr) {
  const auto& cfg = ctx.cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const auto count = static_cast<std::size_t>(cfg.num_sequences);
  const auto nt = static_cast<std::size_t>(n_tested);

  // metric for every (sequence, candidate)
  std::vector<double> metrics(count * nt);
  std::vector<std::vector<SymbolSequence>> cands(count);
  parallel_for(count, workers, [&](std::size_t s) { cands[s] = sequence_candidates(ctx, n_tested, s); });
  parallel_for(count * nt, workers, [&](std::size_t job) {
    const auto s = job / nt, i = job % nt;
    metrics[job] = metric_for_candidate(cands[s][i], ctx.metric_setup, engine.engine).value;
  });

  std::vector<std::size_t> chosen(count);
  std::vector<double> chosen_metric(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<MetricValue> m;
    for (std::size_t i = 0; i < nt; ++i) m.push_back({metrics[s * nt + i]});
    if (cfg.mode == SelectionMode::bs) {
      chosen[s] = select_minimum(m).chosen_index;
    } else {
      chosen[s] = bound_select(m, ctx.accept_fraction(n_tested)).accepted.front();
    }
    chosen_metric[s] = m[chosen[s]].value;
  }

  const int memo_nt = cfg.mode == SelectionMode::bs ? n_tested : 0;
  std::vector<TransmissionResult> tr(count);
  parallel_for(count, workers, [&](std::size_t s) {
    const TransmissionMemo::Key key{memo_nt, s, chosen[s]};
    if (memo) {
      if (auto hit = memo->find(key)) {
        tr[s] = *hit;
        return;
      }
    }
    tr[s] = transmit(ctx, cands[s][chosen[s]], s);
    if (memo) memo->put(key, tr[s]);
  });

  const auto ledger = cfg.mode == SelectionMode::bs
                          ? rate_ledger(ctx.codec, static_cast<std::size_t>(cfg.n), static_cast<std::uint64_t>(n_tested))
                          : rate_ledger(ctx.codec, static_cast<std::size_t>(cfg.n), static_cast<std::uint64_t>(n_tested),
                                        ctx.accept_fraction(n_tested));
  SweepRecord r;
  r.n_tested = n_tested;
  r.n_steps = engine.n_steps;
  r.ideal = engine.ideal;
  r.mode = cfg.mode;
  for (std::size_t s = 0; s < count; ++s)
    r.sequence_se.push_back(
        spectral_efficiency(ledger, tr[s].air_bits_per_4d, ctx.entropy_4d, cfg.symbol_rate, cfg.spacing));
  r.sequence_metric = chosen_metric;
  r.se = mean(r.sequence_se);
  r.se_stderr = standard_error(r.sequence_se);
  r.mean_metric = mean(r.sequence_metric);
  r.metric_stderr = standard_error(r.sequence_metric);
  r.cost = cost_rm_per_2d(cost_input(cfg, n_tested, engine.n_steps));
  r.pilot_loss = ledger.pilot_loss_bits_per_4d;
  r.bound_loss = ledger.bound_loss_bits_per_4d;
  r.seed = cfg.master_seed;
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct SweepOptions {
  int workers = 1;
  CoefficientCache* cache = nullptr;  // fitted entries are added here when given
  std::function<void(const SweepRecord&)> on_record;
};

/// All grid points: engines in order (N_st list, then ideal), N_t ascending within each.
inline std::vector<SweepRecord> run_sweep(const RunConfig& cfg, const SweepOptions& opt = {}) {
  const auto ctx = SweepContext::make(cfg);
  CoefficientCache local;
  CoefficientCache& cache = opt.cache ? *opt.cache : local;
  prepare_coefficients(ctx, cache);
  const auto engines = grid_engines(ctx, cache);
  TransmissionMemo memo;
  std::vector<SweepRecord> out;
  for (const auto& e : engines) {
    for (int nt : cfg.nt_list) {
      try {
        out.push_back(run_grid_point(ctx, e, nt, opt.workers, &memo));
      } catch (const std::exception& ex) {
        throw std::runtime_error("grid point N_t=" + std::to_string(nt) + " N_st=" +
                                 (e.ideal ? std::string("ideal") : std::to_string(e.n_steps)) + ": " + ex.what());
      }
      if (opt.on_record) opt.on_record(out.back());
    }
  }
  return out;
}

}  // namespace seqsel
