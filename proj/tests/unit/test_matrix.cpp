#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "transitive/bitslice.hpp"
#include "transitive/matrix.hpp"
#include "unit/oracles.hpp"

using namespace transitive;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("transitive_test_" + name)).string();
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

QTensorErrc load_error(const std::string& path) {
  try {
    load_qtensor(path);
  } catch (const QTensorError& e) {
    return e.code();
  }
  FAIL("expected QTensorError");
  return QTensorErrc::io;
}

}  // namespace

TEST_CASE("QuantMatrix enforces its invariants") {
  CHECK_THROWS_AS(QuantMatrix(1, 1, 5, {0}), std::invalid_argument);
  CHECK_THROWS_AS(QuantMatrix(2, 2, 4, {0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(QuantMatrix(1, 2, 4, {8, 0}), std::invalid_argument);
  CHECK_THROWS_AS(QuantMatrix(1, 2, 4, {-9, 0}), std::invalid_argument);
  CHECK_NOTHROW(QuantMatrix(1, 2, 4, {-8, 7}));
  CHECK_THROWS_AS(QuantMatrix(2, 3, 4, {0, 0, 0, 0, 0, 0}, GroupScales{2, {1.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(QuantMatrix(2, 3, 4, {0, 0, 0, 0, 0, 0}, GroupScales{2, {1.0, 1.0, 1.0, 1.0}}));
}

TEST_CASE("gen_random range and determinism") {
  for (int bits : {2, 3, 4, 8}) {
    const auto m = gen_random(16, 16, bits, 99);
    for (auto v : m.data()) {
      CHECK(v >= min_signed(bits));
      CHECK(v <= max_signed(bits));
    }
  }
  const auto one = gen_random(1, 1, 4, 7);
  CHECK(one.at(0, 0) >= -8);
  CHECK(one.at(0, 0) <= 7);
  CHECK(gen_random(8, 9, 4, 1234) == gen_random(8, 9, 4, 1234));
  CHECK_FALSE(gen_random(8, 9, 4, 1234) == gen_random(8, 9, 4, 1235));
  CHECK_THROWS_AS(gen_random(2, 2, 5, 1), std::invalid_argument);

  // Every value of the S-bit range shows up, each with roughly equal share.
  const auto big = gen_random(64, 64, 2, 5);
  std::array<int, 4> hist{};
  for (auto v : big.data()) ++hist[static_cast<std::size_t>(v + 2)];
  for (int h : hist) CHECK(h > 900);
}

TEST_CASE("gen_random 32x8 S=8 sliced at T=8 has ~161.9 unique TransRows") {
  // Closed form 256 * (1 - (255/256)^256), checked against brute-force counts.
  const double expected = oracle::expected_distinct(256, 256);
  CHECK(expected == doctest::Approx(161.9).epsilon(0.001));
  double total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto tiles = slice(gen_random(32, 8, 8, seed), 8);
    REQUIRE(tiles.size() == 1);
    std::vector<std::uint32_t> values;
    for (const auto& r : tiles[0].rows) values.push_back(r.value);
    REQUIRE(values.size() == 256);
    total += double(oracle::count_distinct(values));
  }
  CHECK(std::abs(total / 100 - expected) < 2.0);
}

TEST_CASE("quantize_uniform") {
  SUBCASE("all zero input") {
    const auto q = quantize_uniform({2, 4, std::vector<double>(8, 0.0)}, 4, 2);
    for (auto v : q.data()) CHECK(v == 0);
    REQUIRE(q.scales());
    for (double s : q.scales()->values) CHECK(s == 0.0);
  }
  SUBCASE("symmetric scale: [7, -8] at S=4") {
    const auto q = quantize_uniform({1, 2, {7.0, -8.0}}, 4, 2);
    CHECK(q.scales()->values[0] == doctest::Approx(8.0 / 7.0));
    CHECK(q.at(0, 0) == 6);
    CHECK(q.at(0, 1) == -7);
  }
  SUBCASE("integers in range with unit scale stay identical") {
    const auto q = quantize_uniform({1, 4, {7.0, -3.0, 0.0, 1.0}}, 4, 4);
    CHECK(q.scales()->values[0] == 1.0);
    CHECK(q.data()[0] == 7);
    CHECK(q.data()[1] == -3);
    CHECK(q.data()[2] == 0);
    CHECK(q.data()[3] == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(quantize_uniform({0, 0, {}}, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(quantize_uniform({1, 6, std::vector<double>(6, 1.0)}, 4, 4), std::invalid_argument);
  }
  SUBCASE("per-group scales") {
    const auto q = quantize_uniform({1, 4, {1.0, -2.0, 100.0, 50.0}}, 8, 2);
    CHECK(q.scales()->values.size() == 2);
    CHECK(q.at(0, 1) == -127);
    CHECK(q.at(0, 2) == 127);
  }
}

TEST_CASE("reference_gemm") {
  SUBCASE("identity") {
    std::vector<std::int8_t> eye(16, 0);
    for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1;
    const QuantMatrix w(4, 4, 4, eye);
    const auto x = gen_random(4, 5, 4, 3);
    const auto out = reference_gemm(w, x);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t m = 0; m < 5; ++m) CHECK(out.at(k, m) == x.at(k, m));
  }
  SUBCASE("zero operand") {
    const auto out = reference_gemm(QuantMatrix::zeros(3, 4, 8), gen_random(4, 2, 8, 1));
    for (auto v : out.data()) CHECK(v == 0);
  }
  SUBCASE("matches triple loop on random 8x8") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto w = gen_random(8, 8, 4, seed), x = gen_random(8, 8, 4, seed + 100);
      const auto expected = oracle::naive_gemm(w, x);
      const auto out = reference_gemm(w, x);
      for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.data()[i] == expected[i]);
    }
  }
  SUBCASE("bilinear in W rows") {
    // Halve a random S=8 matrix so row 2 can be scaled by c in {2, -2} without leaving the range.
    const auto raw = gen_random(4, 6, 8, 11);
    const auto x = gen_random(6, 3, 8, 12);
    std::vector<std::int8_t> base(raw.data().begin(), raw.data().end());
    for (auto& v : base) v = static_cast<std::int8_t>(v / 2);
    const auto ref = reference_gemm(QuantMatrix(4, 6, 8, base), x);
    for (int c : {2, -2}) {
      auto scaled = base;
      for (std::size_t k = 0; k < 6; ++k) scaled[2 * 6 + k] = static_cast<std::int8_t>(c * scaled[2 * 6 + k]);
      const auto out = reference_gemm(QuantMatrix(4, 6, 8, scaled), x);
      for (std::size_t m = 0; m < 3; ++m) {
        CHECK(out.at(2, m) == c * ref.at(2, m));
        CHECK(out.at(1, m) == ref.at(1, m));
      }
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(reference_gemm(gen_random(2, 3, 4, 1), gen_random(4, 2, 4, 1)), std::invalid_argument);
  }
}

TEST_CASE("AccumMatrix overflow is an error, not wraparound") {
  AccumMatrix acc(1, 1);
  acc.accumulate(0, 0, std::numeric_limits<std::int32_t>::max());
  CHECK_THROWS_AS(acc.accumulate(0, 0, 1), std::overflow_error);
  CHECK(acc.at(0, 0) == std::numeric_limits<std::int32_t>::max());
}

TEST_CASE("qtensor round trip") {
  const auto m = gen_random(13, 7, 4, 77);
  const auto path = temp_path("roundtrip.qt");
  save_qtensor(m, path);
  CHECK(load_qtensor(path) == m);

  const auto q = quantize_uniform({2, 4, {0.5, -1.0, 3.0, 2.0, 1.0, 1.0, -4.0, 0.25}}, 8, 2);
  save_qtensor(q, path);
  const auto back = load_qtensor(path);
  CHECK(back == q);
  CHECK(back.scales()->group_size == 2);
  std::remove(path.c_str());
}

TEST_CASE("qtensor header layout") {
  const auto bytes = encode_qtensor(QuantMatrix(2, 3, 4, {1, -1, 2, -8, 7, 0}));
  REQUIRE(bytes.size() == 16 + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QTNS");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 4);
  CHECK(bytes[6] == 0);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 3);
  CHECK(bytes[16] == 1);
  CHECK(bytes[17] == 0xFF);
  CHECK(bytes[19] == 0xF8);
}

TEST_CASE("qtensor error states are distinct") {
  const auto path = temp_path("bad.qt");
  write_bytes(path, {});
  CHECK(load_error(path) == QTensorErrc::bad_magic);

  auto bytes = encode_qtensor(QuantMatrix(1, 2, 4, {1, 2}));
  bytes[17] = 9;  // 9 does not fit in S = 4
  write_bytes(path, bytes);
  CHECK(load_error(path) == QTensorErrc::out_of_range);

  bytes = encode_qtensor(QuantMatrix(2, 2, 4, {1, 2, 3, 4}));
  bytes.pop_back();
  write_bytes(path, bytes);
  CHECK(load_error(path) == QTensorErrc::truncated);

  bytes = encode_qtensor(QuantMatrix(1, 1, 4, {1}));
  bytes[4] = 2;
  write_bytes(path, bytes);
  CHECK(load_error(path) == QTensorErrc::unsupported_version);
  std::remove(path.c_str());

  CHECK(load_error(temp_path("does_not_exist.qt")) == QTensorErrc::io);
}

TEST_CASE("csv import") {
  const auto m = parse_csv_matrix("1, -2,3\n-4,5,-6\n", 4);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == -6);
  CHECK_THROWS_AS(parse_csv_matrix("1,2\n3\n", 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv_matrix("9\n", 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv_matrix("a\n", 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv_matrix("", 4), std::invalid_argument);
  std::string wide;
  for (int i = 0; i < 65; ++i) wide += (i ? ",0" : "0");
  CHECK_THROWS_AS(parse_csv_matrix(wide + "\n", 4), std::invalid_argument);
}
