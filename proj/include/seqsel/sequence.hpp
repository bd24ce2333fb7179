#pragma once

#include <cstdint>
#include <vector>

#include "seqsel/fft.hpp"

namespace seqsel {

using BitVec = std::vector<std::uint8_t>;

/// n 4D symbols (one complex value per polarization) and the bits that produced them.
struct SymbolSequence {
  CVec symbols_x;
  CVec symbols_y;
  BitVec payload_bits;  // full frame: sign bits followed by shaped-amplitude bits
  BitVec pilot_bits;
  std::uint64_t scramble_index = 0;
  double scale = 1.0;  // amplitude unit: integer amplitude a maps to a * scale

  std::size_t size() const noexcept { return symbols_x.size(); }
};

}  // namespace seqsel
