#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "transitive/matrix.hpp"

namespace transitive {

// T-bit binary row pattern. Bit p selects local input element p.
using TransRow = std::uint32_t;

// Valid TransRow widths.
bool is_supported_width(unsigned width);

// Signed contribution of bit level s in an S-bit two's-complement value:
// 2^s below the sign level, -2^(S-1) at it.
std::int64_t level_weight(unsigned bit_level, int bits);

// Most-significant bit first, e.g. to_binary(11, 4) == "1011".
std::string to_binary(TransRow value, unsigned width);
TransRow parse_binary(const std::string& text);

struct TransRowRec {
  TransRow value = 0;
  std::uint32_t weight_row = 0;  // global row index into W
  std::uint8_t bit_level = 0;

  bool operator==(const TransRowRec&) const = default;
};

/// Binary (S*n x T) sub-tile of a bit-sliced weight matrix.
///
/// Rows are ordered by weight row, then by bit level (0 = LSB). Columns
/// beyond `valid_cols` are zero padding.
struct TransRowTile {
  unsigned width = 8;
  int bits = 8;
  std::size_t n_offset = 0;
  std::size_t k_offset = 0;
  std::size_t weight_rows = 0;
  std::size_t valid_cols = 0;
  std::vector<TransRowRec> rows;
};

// Builds a tile directly from TransRow values. Value i is attributed to
// weight row i / bits, bit level i % bits, i.e. the order slice() emits.
TransRowTile make_tile(std::span<const TransRow> values, unsigned width, int bits = 2);

/// Bit-slices W into tiles of `weight_rows_per_tile` rows by `width` columns.
///
/// K is zero-padded to a multiple of `width`. Tiles are returned n-block
/// major, k-block minor. A `weight_rows_per_tile` of 0 means all rows.
std::vector<TransRowTile> slice(const QuantMatrix& w, unsigned width, std::size_t weight_rows_per_tile = 0);

// Inverse of slice. Throws std::invalid_argument if any (n, k) block is
// missing or duplicated.
QuantMatrix unslice(std::span<const TransRowTile> tiles, int bits, std::size_t rows, std::size_t cols);

}  // namespace transitive
