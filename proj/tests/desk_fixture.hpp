#pragma once

// Small single-channel setups shared by metric, fit and selection tests.

#include <cmath>
#include <vector>

#include "seqsel/fit.hpp"
#include "seqsel/metric.hpp"
#include "seqsel/rng.hpp"
#include "seqsel/shaping.hpp"

namespace seqsel::oracle {

inline double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline const EssCodec& reference_codec() {
  static const EssCodec codec = EssCodec::with_rate(256, AmplitudeAlphabet::qam64(), 333);
  return codec;
}

inline LinkConfig desk_link(int spans) {
  LinkConfig link;
  link.spans = spans;
  return link;
}

inline MetricSetup desk_setup(int spans, double power_dbm, std::size_t n = 256, double sps = 1.125) {
  return MetricSetup::make(desk_link(spans), 46.5e9, sps, 0.05, dbm_to_w(power_dbm), n);
}

/// Independent random shaped sequences at the setup's launch power.
inline std::vector<SymbolSequence> random_sequences(const MetricSetup& setup, std::size_t n, std::size_t count,
                                                    std::uint64_t seed) {
  const auto& codec = reference_codec();
  const double scale = amplitude_scale(codec, setup.symbol_energy());
  std::vector<SymbolSequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_stream(seed, StreamTag::population, {i});
    out.push_back(bits_to_sequence(random_bits(rng, frame_bits(codec, n)), codec, n, scale));
  }
  return out;
}

}  // namespace seqsel::oracle
