#pragma once

// Sequence selection: bit-scrambling (BS) candidate generation with pilot bits,
// minimum-metric choice, the threshold-based selection bound, and rate losses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/metric.hpp"
#include "seqsel/sequence.hpp"
#include "seqsel/shaping.hpp"

namespace seqsel {

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// ceil(log2 N_t); 0 for N_t == 1.
inline int pilot_bit_count(std::uint64_t n_tested) {
  require(n_tested >= 1, "number of tested sequences must be positive");
  int bits = 0;
  while ((std::uint64_t{1} << bits) < n_tested) ++bits;
  return bits;
}

/// Frame position of pilot bit j: the I-sign bit of 2D symbol j (2D symbols ordered x0, y0, x1, y1, ...).
inline std::size_t pilot_position(int j) { return 2 * static_cast<std::size_t>(j); }

namespace detail {

inline BitVec assemble_frame(std::span<const std::uint8_t> scrambled, std::uint64_t index, int pilots) {
  BitVec frame(scrambled.size() + static_cast<std::size_t>(pilots));
  std::size_t src = 0;
  int next_pilot = 0;
  for (std::size_t pos = 0; pos < frame.size(); ++pos) {
    if (next_pilot < pilots && pos == pilot_position(next_pilot)) {
      frame[pos] = static_cast<std::uint8_t>((index >> next_pilot) & 1u);
      ++next_pilot;
    } else {
      frame[pos] = scrambled[src++];
    }
  }
  return frame;
}

}  // namespace detail

/// Candidate i carries pilots(i) on fixed sign positions and scramble(info, mask_i) elsewhere.
inline std::vector<SymbolSequence> bs_candidates(std::span<const std::uint8_t> info_bits, std::uint64_t n_tested,
                                                 std::uint64_t master_seed, const EssCodec& codec, std::size_t n,
                                                 double scale) {
  if (!is_power_of_two(n_tested)) throw ParameterError("number of tested sequences must be a power of two");
  const int pilots = pilot_bit_count(n_tested);
  const std::size_t total = frame_bits(codec, n);
  require(static_cast<std::size_t>(pilots) <= 2 * n, "too many pilot bits for the sequence");
  if (info_bits.size() + static_cast<std::size_t>(pilots) != total)
    throw ParameterError("info bit count must equal frame bits minus pilot bits");

  std::vector<SymbolSequence> out;
  out.reserve(n_tested);
  for (std::uint64_t i = 0; i < n_tested; ++i) {
    const auto mask = make_scramble_mask(master_seed, i, info_bits.size());
    const auto frame = detail::assemble_frame(scramble(info_bits, mask), i, pilots);
    auto seq = bits_to_sequence(frame, codec, n, scale);
    seq.scramble_index = i;
    seq.pilot_bits.resize(static_cast<std::size_t>(pilots));
    for (int j = 0; j < pilots; ++j) seq.pilot_bits[static_cast<std::size_t>(j)] = frame[pilot_position(j)];
    out.push_back(std::move(seq));
  }
  return out;
}

/// Receiver side: read pilots, strip them, descramble.
inline BitVec bs_recover_info(std::span<const std::uint8_t> frame, std::uint64_t n_tested, std::uint64_t master_seed) {
  const int pilots = pilot_bit_count(n_tested);
  require(frame.size() >= static_cast<std::size_t>(pilots), "frame shorter than pilot field");
  std::uint64_t index = 0;
  BitVec payload;
  payload.reserve(frame.size() - static_cast<std::size_t>(pilots));
  int next_pilot = 0;
  for (std::size_t pos = 0; pos < frame.size(); ++pos) {
    if (next_pilot < pilots && pos == pilot_position(next_pilot)) {
      index |= static_cast<std::uint64_t>(frame[pos] & 1u) << next_pilot;
      ++next_pilot;
    } else {
      payload.push_back(frame[pos]);
    }
  }
  return scramble(payload, make_scramble_mask(master_seed, index, payload.size()));
}

struct SelectionOutcome {
  std::size_t chosen_index = 0;
  MetricValue chosen_metric;
  std::vector<MetricValue> all_metrics;
  int pilot_bit_count = 0;
};

/// Minimum over precomputed metrics; ties go to the smallest index.
inline SelectionOutcome select_minimum(std::vector<MetricValue> metrics) {
  if (metrics.empty()) throw ParameterError("cannot select from an empty candidate list");
  SelectionOutcome out;
  for (std::size_t i = 1; i < metrics.size(); ++i)
    if (metrics[i].value < metrics[out.chosen_index].value) out.chosen_index = i;
  out.chosen_metric = metrics[out.chosen_index];
  out.pilot_bit_count = pilot_bit_count(metrics.size());
  out.all_metrics = std::move(metrics);
  return out;
}

inline SelectionOutcome bs_select(std::span<const SymbolSequence> candidates,
                                  const std::function<MetricValue(const SymbolSequence&)>& metric_fn) {
  if (candidates.empty()) throw ParameterError("cannot select from an empty candidate list");
  std::vector<MetricValue> metrics;
  metrics.reserve(candidates.size());
  for (const auto& c : candidates) metrics.push_back(metric_fn(c));
  return select_minimum(std::move(metrics));
}

struct BoundSelection {
  double threshold = 0.0;
  std::vector<std::size_t> accepted;
  double loss_bits_per_sequence = 0.0;
};

/// Accepts metrics at or below the empirical eta-quantile; charges -log2(eta) bits.
inline BoundSelection bound_select(std::span<const MetricValue> population, double accept_fraction) {
  if (!(accept_fraction > 0.0 && accept_fraction <= 1.0)) throw ParameterError("acceptance fraction must lie in (0, 1]");
  if (population.empty()) throw ParameterError("empty metric population");
  std::vector<double> sorted;
  sorted.reserve(population.size());
  for (auto m : population) sorted.push_back(m.value);
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(accept_fraction * static_cast<double>(sorted.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());

  BoundSelection out;
  out.threshold = sorted[rank - 1];
  for (std::size_t i = 0; i < population.size(); ++i)
    if (population[i].value <= out.threshold) out.accepted.push_back(i);
  out.loss_bits_per_sequence = 0.0 - std::log2(accept_fraction);
  return out;
}

struct RateLedger {
  double gross_bits_per_4d = 0.0;
  double pilot_loss_bits_per_4d = 0.0;
  double bound_loss_bits_per_4d = 0.0;
  double net_bits_per_4d = 0.0;
};

/// BS mode when `accept_fraction` is empty, bound mode otherwise (no pilots).
inline RateLedger rate_ledger(const EssCodec& codec, std::size_t n, std::uint64_t n_tested,
                              std::optional<double> accept_fraction = std::nullopt) {
  require(n >= 1, "sequence must hold at least one symbol");
  RateLedger r;
  r.gross_bits_per_4d = gross_bits_per_4d(codec);
  if (accept_fraction) {
    if (!(*accept_fraction > 0.0 && *accept_fraction <= 1.0))
      throw ParameterError("acceptance fraction must lie in (0, 1]");
    r.bound_loss_bits_per_4d = (0.0 - std::log2(*accept_fraction)) / static_cast<double>(n);
  } else {
    r.pilot_loss_bits_per_4d = pilot_bit_count(n_tested) / static_cast<double>(n);
  }
  r.net_bits_per_4d = r.gross_bits_per_4d - r.pilot_loss_bits_per_4d - r.bound_loss_bits_per_4d;
  return r;
}

}  // namespace seqsel
