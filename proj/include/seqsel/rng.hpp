#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace seqsel {

using Rng = std::mt19937_64;

/// Purposes of derived random streams. Values are part of the reproducibility contract.
enum class StreamTag : std::uint64_t {
  scramble_mask = 1,
  info_bits = 2,
  population = 3,
  wdm_neighbor = 4,
  ase_noise = 5,
  training = 6,
};

/// Counter-style stream derivation: the stream depends only on (master_seed, tag, path).
inline Rng make_stream(std::uint64_t master_seed, StreamTag tag, std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * path.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master_seed);
  push(static_cast<std::uint64_t>(tag));
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Uniform random bits, consumed LSB-first from 64-bit draws.
inline std::vector<std::uint8_t> random_bits(Rng& rng, std::size_t count) {
  std::vector<std::uint8_t> bits(count);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

}  // namespace seqsel
