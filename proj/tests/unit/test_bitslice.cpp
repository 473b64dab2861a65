#include <array>
#include <set>

#include "doctest.h"
#include "transitive/bitslice.hpp"
#include "transitive/matrix.hpp"
#include "transitive/rng.hpp"

using namespace transitive;

TEST_CASE("binary display is most-significant bit first") {
  CHECK(to_binary(11, 4) == "1011");
  CHECK(to_binary(2, 4) == "0010");
  CHECK(to_binary(1, 8) == "00000001");
  CHECK(parse_binary("1011") == 11);
  CHECK_THROWS_AS(parse_binary("10a1"), std::invalid_argument);
}

TEST_CASE("level weights follow two's complement") {
  CHECK(level_weight(0, 4) == 1);
  CHECK(level_weight(2, 4) == 4);
  CHECK(level_weight(3, 4) == -8);
  CHECK(level_weight(1, 2) == -2);
  CHECK(level_weight(7, 8) == -128);
}

TEST_CASE("4x4 Int4 matrix slices into a 16x4 binary matrix") {
  const auto w = gen_random(4, 4, 4, 42);
  const auto tiles = slice(w, 4);
  REQUIRE(tiles.size() == 1);
  CHECK(tiles[0].rows.size() == 16);
  CHECK(tiles[0].weight_rows == 4);
  for (const auto& r : tiles[0].rows) CHECK(r.value < 16u);
}

TEST_CASE("zero matrix gives zero TransRows") {
  for (const auto& t : slice(QuantMatrix::zeros(5, 9, 8), 4))
    for (const auto& r : t.rows) CHECK(r.value == 0u);
}

TEST_CASE("[[-8]] at S=4 pads to T=4 and sets only the sign level") {
  const QuantMatrix w(1, 1, 4, {-8});
  const auto tiles = slice(w, 4);
  REQUIRE(tiles.size() == 1);
  REQUIRE(tiles[0].rows.size() == 4);
  CHECK(tiles[0].valid_cols == 1);
  for (const auto& r : tiles[0].rows) {
    CHECK(r.weight_row == 0);
    CHECK(r.value == (r.bit_level == 3 ? 1u : 0u));
  }
  CHECK(level_weight(3, 4) == -8);
  CHECK(unslice(tiles, 4, 1, 1) == w);
}

TEST_CASE("bit p of a TransRow selects column k_offset + p") {
  // Row 0 = [1, 0, 1, 1] at S = 2: bit level 0 has ones at columns 0, 2, 3.
  const QuantMatrix w(1, 4, 2, {1, 0, 1, 1});
  const auto tiles = slice(w, 4);
  CHECK(to_binary(tiles[0].rows[0].value, 4) == "1101");
  CHECK(tiles[0].rows[1].value == 0u);
}

TEST_CASE("unslice inverts slice") {
  SUBCASE("32x64 S=8") {
    const auto w = gen_random(32, 64, 8, 1);
    CHECK(unslice(slice(w, 8, 5), 8, 32, 64) == w);
  }
  SUBCASE("K=60 with T=8 padding") {
    const auto w = gen_random(7, 60, 4, 2);
    const auto tiles = slice(w, 8);
    CHECK(tiles.back().valid_cols == 4);
    CHECK(unslice(tiles, 4, 7, 60) == w);
  }
  SUBCASE("S=2") {
    const auto w = gen_random(9, 10, 2, 3);
    CHECK(unslice(slice(w, 4, 2), 2, 9, 10) == w);
  }
  SUBCASE("random shapes and widths") {
    Rng rng(2024);
    for (int i = 0; i < 50; ++i) {
      const int bits = std::array{2, 3, 4, 8}[rng.below(4)];
      const unsigned width = std::array{2u, 4u, 8u, 10u, 12u, 16u}[rng.below(6)];
      const std::size_t rows = 1 + rng.below(20), cols = 1 + rng.below(40);
      const auto w = gen_random(rows, cols, bits, rng.next());
      const auto tiles = slice(w, width, 1 + rng.below(8));
      std::size_t total_rows = 0;
      for (const auto& t : tiles) total_rows += t.rows.size();
      CHECK(total_rows == bits * rows * ((cols + width - 1) / width));
      CHECK(unslice(tiles, bits, rows, cols) == w);
    }
  }
}

TEST_CASE("unslice rejects an incomplete tile set") {
  const auto w = gen_random(4, 16, 4, 5);
  auto tiles = slice(w, 8);
  tiles.pop_back();
  CHECK_THROWS_AS(unslice(tiles, 4, 4, 16), std::invalid_argument);
}

TEST_CASE("tile records carry unique (weight_row, bit_level) pairs") {
  const auto tiles = slice(gen_random(6, 8, 4, 9), 8, 3);
  for (const auto& t : tiles) {
    std::set<std::pair<std::uint32_t, std::uint8_t>> seen;
    for (const auto& r : t.rows) CHECK(seen.insert({r.weight_row, r.bit_level}).second);
    CHECK(t.rows.size() == 4 * t.weight_rows);
  }
}

TEST_CASE("slice rejects unsupported widths") {
  CHECK_THROWS_AS(slice(gen_random(2, 2, 4, 1), 3), std::invalid_argument);
  CHECK_THROWS_AS(slice(gen_random(2, 2, 4, 1), 32), std::invalid_argument);
}
