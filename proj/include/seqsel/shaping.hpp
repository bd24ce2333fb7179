#pragma once

// Enumerative sphere shaping (ESS) over a bounded-energy set of amplitude
// sequences, sign-bit mapping to square QAM, and payload bit scrambling.
//
// Frame layout for n 4D symbols (4n amplitude slots, slot j belongs to symbol
// j / 4, component j % 4 in the order I_x, Q_x, I_y, Q_y):
//   bits [0, 4n)               sign of slot j (0 -> +, 1 -> -)
//   bits [4n, 4n + B*k)       B = 4n / L shaping blocks of k bits, MSB first,
//                              block b covers slots [b L, (b + 1) L)

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "seqsel/errors.hpp"
#include "seqsel/rng.hpp"
#include "seqsel/sequence.hpp"

namespace seqsel {

using BigInt = boost::multiprecision::cpp_int;

struct AmplitudeAlphabet {
  std::vector<int> amplitudes;

  static AmplitudeAlphabet qam64() { return {{1, 3, 5, 7}}; }

  void validate() const {
    require(!amplitudes.empty(), "amplitude alphabet is empty");
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      require(amplitudes[i] > 0 && amplitudes[i] % 2 == 1, "amplitudes must be odd positive integers");
      if (i > 0) require(amplitudes[i] > amplitudes[i - 1], "amplitudes must be strictly increasing");
    }
  }

  int min() const { return amplitudes.front(); }
  int max() const { return amplitudes.back(); }
  std::size_t size() const { return amplitudes.size(); }
};

struct EssConfig {
  int block_len = 0;        // L
  long max_energy = 0;      // E_max
  int bits_per_block = 0;   // k
};

/// T(i, e): number of completions of a length-i prefix with energy e into a
/// length-L sequence of total energy <= E_max. Immutable after construction.
class EssCountTable {
 public:
  EssCountTable(int block_len, AmplitudeAlphabet alphabet, long max_energy)
      : block_len_(block_len), alphabet_(std::move(alphabet)), max_energy_(max_energy) {
    require(block_len >= 1, "ESS block length must be positive");
    alphabet_.validate();
    base_ = static_cast<long>(alphabet_.min()) * alphabet_.min();
    if (max_energy < block_len * base_) throw ParameterError("infeasible energy bound");
    granule_ = 0;
    for (int a : alphabet_.amplitudes) granule_ = std::gcd(granule_, static_cast<long>(a) * a - base_);
    if (granule_ == 0) granule_ = 1;
    for (int a : alphabet_.amplitudes) steps_.push_back((static_cast<long>(a) * a - base_) / granule_);
    levels_ = (max_energy - block_len * base_) / granule_ + 1;

    table_.assign(static_cast<std::size_t>((block_len + 1) * levels_), BigInt(0));
    for (long m = 0; m < levels_; ++m) at(block_len, m) = 1;
    for (int i = block_len - 1; i >= 0; --i)
      for (long m = 0; m < levels_; ++m) {
        BigInt acc = 0;
        for (long d : steps_)
          if (m + d < levels_) acc += at(i + 1, m + d);
        at(i, m) = std::move(acc);
      }
  }

  int block_len() const noexcept { return block_len_; }
  long max_energy() const noexcept { return max_energy_; }
  const AmplitudeAlphabet& alphabet() const noexcept { return alphabet_; }

  /// Count for an arbitrary prefix energy e (not necessarily reachable).
  BigInt count(int i, long e) const {
    require(i >= 0 && i <= block_len_, "ESS prefix length out of range");
    const long slack = max_energy_ - e - static_cast<long>(block_len_ - i) * base_;
    if (slack < 0) return 0;
    const long budget = slack / granule_;
    const long m = std::max(0L, (levels_ - 1) - budget);
    return table_[index(i, m)];
  }

  const BigInt& total() const { return table_[index(0, 0)]; }

  // Excess-level view used by the codec: prefix energy = i * a_min^2 + granule * m.
  long levels() const noexcept { return levels_; }
  const std::vector<long>& steps() const noexcept { return steps_; }
  const BigInt& completions(int i, long m) const { return table_[index(i, m)]; }

 private:
  std::size_t index(int i, long m) const { return static_cast<std::size_t>(i * levels_ + m); }
  BigInt& at(int i, long m) { return table_[index(i, m)]; }

  int block_len_;
  AmplitudeAlphabet alphabet_;
  long max_energy_;
  long base_ = 1;
  long granule_ = 1;
  long levels_ = 1;
  std::vector<long> steps_;
  std::vector<BigInt> table_;
};

inline EssCountTable ess_count_table(int block_len, const AmplitudeAlphabet& alphabet, long max_energy) {
  return EssCountTable(block_len, alphabet, max_energy);
}

inline int floor_log2(const BigInt& v) {
  require(v > 0, "log2 of non-positive count");
  return static_cast<int>(boost::multiprecision::msb(v));
}

/// Smallest E_max whose admissible set holds at least 2^k sequences.
inline long minimal_energy_for_bits(int block_len, const AmplitudeAlphabet& alphabet, int bits) {
  alphabet.validate();
  require(block_len >= 1 && bits >= 0, "invalid ESS rate request");
  const long base = static_cast<long>(alphabet.min()) * alphabet.min();
  long granule = 0;
  for (int a : alphabet.amplitudes) granule = std::gcd(granule, static_cast<long>(a) * a - base);
  if (granule == 0) granule = 1;
  std::vector<long> steps;
  for (int a : alphabet.amplitudes) steps.push_back((static_cast<long>(a) * a - base) / granule);
  const long top = steps.back() * block_len;

  // exact-excess counts of full-length sequences
  std::vector<BigInt> cur(static_cast<std::size_t>(top + 1), BigInt(0)), next(cur.size());
  cur[0] = 1;
  for (int i = 0; i < block_len; ++i) {
    std::fill(next.begin(), next.end(), BigInt(0));
    for (long m = 0; m <= top; ++m) {
      if (cur[m] == 0) continue;
      for (long d : steps)
        if (m + d <= top) next[m + d] += cur[m];
    }
    std::swap(cur, next);
  }
  const BigInt target = BigInt(1) << bits;
  BigInt cumulative = 0;
  for (long m = 0; m <= top; ++m) {
    cumulative += cur[m];
    if (cumulative >= target) return block_len * base + granule * m;
  }
  throw ParameterError("requested ESS rate exceeds alphabet capacity");
}

/// ESS encoder/decoder: lexicographic indexing of the admissible set (alphabet order).
class EssCodec {
 public:
  /// k is derived as floor(log2 T(0,0)).
  EssCodec(int block_len, const AmplitudeAlphabet& alphabet, long max_energy)
      : table_(block_len, alphabet, max_energy) {
    bits_ = floor_log2(table_.total());
  }

  /// E_max is the smallest bound admitting 2^k sequences.
  static EssCodec with_rate(int block_len, const AmplitudeAlphabet& alphabet, int bits) {
    EssCodec codec(block_len, alphabet, minimal_energy_for_bits(block_len, alphabet, bits));
    require(codec.bits_ == bits, "ESS: no energy bound yields exactly the requested bit count");
    return codec;
  }

  /// Explicit (L, E_max, k); k must equal floor(log2 T(0,0)).
  static EssCodec from_config(const EssConfig& cfg, const AmplitudeAlphabet& alphabet) {
    EssCodec codec(cfg.block_len, alphabet, cfg.max_energy);
    require(codec.bits_ == cfg.bits_per_block, "ESS: k must equal floor(log2 of the admissible count)");
    return codec;
  }

  EssConfig config() const { return {table_.block_len(), table_.max_energy(), bits_}; }
  const EssCountTable& table() const noexcept { return table_; }
  const AmplitudeAlphabet& alphabet() const noexcept { return table_.alphabet(); }
  int block_len() const noexcept { return table_.block_len(); }
  int bits() const noexcept { return bits_; }

  std::vector<int> encode_index(BigInt index) const {
    if (index < 0 || index >= table_.total()) throw ParameterError("ESS index outside the admissible set");
    const auto& alpha = alphabet().amplitudes;
    const auto& steps = table_.steps();
    std::vector<int> out(static_cast<std::size_t>(block_len()));
    long m = 0;
    for (int i = 0; i < block_len(); ++i) {
      for (std::size_t a = 0; a < alpha.size(); ++a) {
        const long nm = m + steps[a];
        if (nm >= table_.levels()) throw ParameterError("ESS encoder inconsistency");
        const BigInt& c = table_.completions(i + 1, nm);
        if (index < c) {
          out[static_cast<std::size_t>(i)] = alpha[a];
          m = nm;
          break;
        }
        index -= c;
      }
    }
    return out;
  }

  BigInt decode_index(std::span<const int> amps) const {
    require(static_cast<int>(amps.size()) == block_len(), "not in shaping codebook: wrong block length");
    const auto& alpha = alphabet().amplitudes;
    const auto& steps = table_.steps();
    BigInt index = 0;
    long m = 0;
    for (int i = 0; i < block_len(); ++i) {
      const auto it = std::find(alpha.begin(), alpha.end(), amps[static_cast<std::size_t>(i)]);
      if (it == alpha.end()) throw ParameterError("not in shaping codebook: amplitude outside alphabet");
      const auto pos = static_cast<std::size_t>(it - alpha.begin());
      for (std::size_t a = 0; a < pos; ++a) {
        const long nm = m + steps[a];
        if (nm < table_.levels()) index += table_.completions(i + 1, nm);
      }
      m += steps[pos];
      if (m >= table_.levels()) throw ParameterError("not in shaping codebook: energy bound exceeded");
    }
    return index;
  }

  std::vector<int> encode(std::span<const std::uint8_t> bits) const {
    require(static_cast<int>(bits.size()) == bits_, "ESS encode: bit count must equal k");
    BigInt index = 0;
    for (auto b : bits) {
      index <<= 1;
      if (b) index |= 1;
    }
    return encode_index(std::move(index));
  }

  BitVec decode(std::span<const int> amps) const {
    BigInt index = decode_index(amps);
    if (index >= (BigInt(1) << bits_)) throw ParameterError("not in shaping codebook: index beyond 2^k");
    BitVec bits(static_cast<std::size_t>(bits_));
    for (int j = 0; j < bits_; ++j) bits[static_cast<std::size_t>(j)] = bit_test(index, static_cast<unsigned>(bits_ - 1 - j)) ? 1 : 0;
    return bits;
  }

  /// Per-position-averaged amplitude marginal over the whole admissible set.
  std::vector<double> amplitude_distribution() const {
    const auto& steps = table_.steps();
    const long levels = table_.levels();
    const int len = block_len();
    std::vector<BigInt> prefix(static_cast<std::size_t>(levels), BigInt(0)), next(prefix.size());
    prefix[0] = 1;
    std::vector<double> p(steps.size(), 0.0);
    const double total = table_.total().convert_to<double>();
    for (int i = 0; i < len; ++i) {
      std::fill(next.begin(), next.end(), BigInt(0));
      for (long m = 0; m < levels; ++m) {
        if (prefix[m] == 0) continue;
        const double pre = prefix[m].convert_to<double>();
        for (std::size_t a = 0; a < steps.size(); ++a) {
          const long nm = m + steps[a];
          if (nm >= levels) continue;
          p[a] += pre * (table_.completions(i + 1, nm).convert_to<double>() / total);
          next[nm] += prefix[m];
        }
      }
      std::swap(prefix, next);
    }
    for (double& v : p) v /= len;
    return p;
  }

 private:
  EssCountTable table_;
  int bits_ = 0;
};

inline std::vector<int> ess_encode(std::span<const std::uint8_t> bits, const EssCodec& codec) {
  return codec.encode(bits);
}

inline BitVec ess_decode(std::span<const int> amps, const EssCodec& codec) { return codec.decode(amps); }

/// Bits per 4D symbol before pilot or selection losses: 4 sign bits + 4 k / L.
inline double gross_bits_per_4d(const EssCodec& codec) {
  return 4.0 + 4.0 * codec.bits() / static_cast<double>(codec.block_len());
}

/// Amplitude scale giving mean 4D-symbol energy `symbol_energy` under the codec's amplitude marginal.
inline double amplitude_scale(const EssCodec& codec, double symbol_energy) {
  require(symbol_energy > 0.0, "symbol energy must be positive");
  const auto p = codec.amplitude_distribution();
  double e2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) e2 += p[i] * codec.alphabet().amplitudes[i] * codec.alphabet().amplitudes[i];
  return std::sqrt(symbol_energy / (4.0 * e2));
}

inline std::size_t frame_bits(const EssCodec& codec, std::size_t n) {
  const auto slots = 4 * n;
  require(slots % static_cast<std::size_t>(codec.block_len()) == 0, "ESS block length must divide 4n");
  return slots + slots / static_cast<std::size_t>(codec.block_len()) * static_cast<std::size_t>(codec.bits());
}

/// Maps a frame to n 4D symbols; integer amplitude a becomes a * scale.
inline SymbolSequence bits_to_sequence(std::span<const std::uint8_t> bits, const EssCodec& codec, std::size_t n,
                                       double scale) {
  require(n >= 1, "sequence must hold at least one symbol");
  if (bits.size() != frame_bits(codec, n)) throw ParameterError("bits_to_sequence: bit-length mismatch");
  const std::size_t slots = 4 * n;
  const auto len = static_cast<std::size_t>(codec.block_len());
  const auto k = static_cast<std::size_t>(codec.bits());

  std::vector<double> comp(slots);
  for (std::size_t b = 0; b < slots / len; ++b) {
    const auto amps = codec.encode(bits.subspan(slots + b * k, k));
    for (std::size_t i = 0; i < len; ++i) comp[b * len + i] = amps[i];
  }
  for (std::size_t j = 0; j < slots; ++j)
    if (bits[j]) comp[j] = -comp[j];

  SymbolSequence seq;
  seq.symbols_x.resize(n);
  seq.symbols_y.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    seq.symbols_x[s] = {comp[4 * s] * scale, comp[4 * s + 1] * scale};
    seq.symbols_y[s] = {comp[4 * s + 2] * scale, comp[4 * s + 3] * scale};
  }
  seq.payload_bits.assign(bits.begin(), bits.end());
  seq.scale = scale;
  return seq;
}

/// Inverse of bits_to_sequence for symbols lying on the (scaled) grid.
inline BitVec sequence_to_bits(const SymbolSequence& seq, const EssCodec& codec) {
  const std::size_t n = seq.size();
  require(n >= 1 && seq.symbols_y.size() == n, "malformed symbol sequence");
  const std::size_t slots = 4 * n;
  const auto len = static_cast<std::size_t>(codec.block_len());
  BitVec bits(frame_bits(codec, n));
  std::vector<int> amps(slots);
  for (std::size_t s = 0; s < n; ++s) {
    const double c[4] = {seq.symbols_x[s].real(), seq.symbols_x[s].imag(), seq.symbols_y[s].real(),
                         seq.symbols_y[s].imag()};
    for (int q = 0; q < 4; ++q) {
      const std::size_t j = 4 * s + static_cast<std::size_t>(q);
      bits[j] = c[q] < 0.0 ? 1 : 0;
      amps[j] = static_cast<int>(std::lround(std::abs(c[q]) / seq.scale));
    }
  }
  std::size_t pos = slots;
  for (std::size_t b = 0; b < slots / len; ++b) {
    const auto blk = codec.decode(std::span<const int>(amps).subspan(b * len, len));
    std::copy(blk.begin(), blk.end(), bits.begin() + static_cast<long>(pos));
    pos += blk.size();
  }
  return bits;
}

struct ScrambleMask {
  std::uint64_t index = 0;
  BitVec mask_bits;
};

/// Deterministic in (master_seed, index); index 0 is the all-zero mask.
inline ScrambleMask make_scramble_mask(std::uint64_t master_seed, std::uint64_t index, std::size_t length) {
  if (index == 0) return {0, BitVec(length, 0)};
  auto rng = make_stream(master_seed, StreamTag::scramble_mask, {index});
  return {index, random_bits(rng, length)};
}

inline BitVec scramble(std::span<const std::uint8_t> bits, const ScrambleMask& mask) {
  if (mask.mask_bits.size() < bits.size()) throw ParameterError("scramble mask shorter than payload");
  BitVec out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = static_cast<std::uint8_t>(bits[i] ^ mask.mask_bits[i]);
  return out;
}

}  // namespace seqsel
