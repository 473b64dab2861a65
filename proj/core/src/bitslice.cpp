#include "transitive/bitslice.hpp"

#include <algorithm>
#include <stdexcept>

namespace transitive {

bool is_supported_width(unsigned width) {
  switch (width) {
    case 2: case 4: case 8: case 10: case 12: case 16:
      return true;
    default:
      return false;
  }
}

std::int64_t level_weight(unsigned bit_level, int bits) {
  if (static_cast<int>(bit_level) == bits - 1) return -(std::int64_t{1} << bit_level);
  return std::int64_t{1} << bit_level;
}

std::string to_binary(TransRow value, unsigned width) {
  std::string s(width, '0');
  for (unsigned p = 0; p < width; ++p) {
    if (value >> p & 1u) s[width - 1 - p] = '1';
  }
  return s;
}

TransRow parse_binary(const std::string& text) {
  if (text.empty() || text.size() > 16) throw std::invalid_argument("parse_binary: expected 1-16 binary digits");
  TransRow v = 0;
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("parse_binary: not a binary string: " + text);
    v = (v << 1) | TransRow(c - '0');
  }
  return v;
}

TransRowTile make_tile(std::span<const TransRow> values, unsigned width, int bits) {
  if (!is_supported_width(width)) throw std::invalid_argument("make_tile: unsupported width");
  if (!is_supported_bits(bits)) throw std::invalid_argument("make_tile: unsupported bit width");
  TransRowTile tile;
  tile.width = width;
  tile.bits = bits;
  tile.weight_rows = (values.size() + bits - 1) / bits;
  tile.valid_cols = width;
  tile.rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >> width) throw std::invalid_argument("make_tile: value wider than tile width");
    tile.rows.push_back({values[i], static_cast<std::uint32_t>(i / bits), static_cast<std::uint8_t>(i % bits)});
  }
  return tile;
}

std::vector<TransRowTile> slice(const QuantMatrix& w, unsigned width, std::size_t weight_rows_per_tile) {
  if (!is_supported_width(width)) {
    throw std::invalid_argument("slice: unsupported TransRow width " + std::to_string(width));
  }
  const std::size_t n_block = weight_rows_per_tile == 0 ? w.rows() : weight_rows_per_tile;
  const auto bits = static_cast<unsigned>(w.bits());
  const std::uint32_t mask = (1u << bits) - 1;

  std::vector<TransRowTile> tiles;
  for (std::size_t n0 = 0; n0 < w.rows(); n0 += n_block) {
    const std::size_t n1 = std::min(w.rows(), n0 + n_block);
    for (std::size_t k0 = 0; k0 < w.cols(); k0 += width) {
      TransRowTile tile;
      tile.width = width;
      tile.bits = w.bits();
      tile.n_offset = n0;
      tile.k_offset = k0;
      tile.weight_rows = n1 - n0;
      tile.valid_cols = std::min<std::size_t>(width, w.cols() - k0);
      tile.rows.reserve(tile.weight_rows * bits);
      for (std::size_t n = n0; n < n1; ++n) {
        for (unsigned s = 0; s < bits; ++s) {
          TransRow v = 0;
          for (std::size_t p = 0; p < tile.valid_cols; ++p) {
            const auto u = static_cast<std::uint32_t>(w.at(n, k0 + p)) & mask;
            v |= ((u >> s) & 1u) << p;
          }
          tile.rows.push_back({v, static_cast<std::uint32_t>(n), static_cast<std::uint8_t>(s)});
        }
      }
      tiles.push_back(std::move(tile));
    }
  }
  return tiles;
}

QuantMatrix unslice(std::span<const TransRowTile> tiles, int bits, std::size_t rows, std::size_t cols) {
  std::vector<std::int64_t> acc(rows * cols, 0);
  std::vector<std::uint8_t> seen(rows * cols, 0);
  for (const auto& tile : tiles) {
    if (tile.bits != bits) throw std::invalid_argument("unslice: tile bit width mismatch");
    for (const auto& rec : tile.rows) {
      if (rec.weight_row >= rows || rec.bit_level >= bits) throw std::invalid_argument("unslice: record out of range");
      for (std::size_t p = 0; p < tile.valid_cols; ++p) {
        const std::size_t k = tile.k_offset + p;
        if (k >= cols) throw std::invalid_argument("unslice: tile exceeds matrix columns");
        if (rec.value >> p & 1u) acc[rec.weight_row * cols + k] += level_weight(rec.bit_level, bits);
      }
    }
    for (std::size_t n = tile.n_offset; n < tile.n_offset + tile.weight_rows && n < rows; ++n) {
      for (std::size_t p = 0; p < tile.valid_cols; ++p) {
        auto& s = seen[n * cols + tile.k_offset + p];
        if (s) throw std::invalid_argument("unslice: overlapping tiles");
        s = 1;
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw std::invalid_argument("unslice: missing tile");

  std::vector<std::int8_t> data(acc.size());
  std::transform(acc.begin(), acc.end(), data.begin(), [](std::int64_t v) { return static_cast<std::int8_t>(v); });
  return QuantMatrix(rows, cols, bits, std::move(data));
}

}  // namespace transitive
