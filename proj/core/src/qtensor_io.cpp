#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "transitive/matrix.hpp"

namespace transitive {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'N', 'S'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kCsvMaxDim = 64;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[i]} << (8 * i);
  return v;
}

}  // namespace

// Layout: "QTNS" | version | bits | flags | reserved | rows u32 | cols u32 |
// int8 elements | [f64 scales]. All multi-byte fields little-endian. The
// group size is not stored; it is recovered from the scale count.
std::vector<std::uint8_t> encode_qtensor(const QuantMatrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + m.data().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(m.bits()));
  out.push_back(m.scales() ? 1 : 0);
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (std::int8_t v : m.data()) out.push_back(static_cast<std::uint8_t>(v));
  if (m.scales()) {
    for (double s : m.scales()->values) {
      const auto bits = std::bit_cast<std::uint64_t>(s);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }
  return out;
}

QuantMatrix decode_qtensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw QTensorError(QTensorErrc::bad_magic, "qtensor: bad magic");
  }
  if (bytes.size() < kHeaderSize) throw QTensorError(QTensorErrc::truncated, "qtensor: truncated header");
  if (bytes[4] != kVersion) {
    throw QTensorError(QTensorErrc::unsupported_version,
                       "qtensor: unsupported version " + std::to_string(bytes[4]));
  }
  const int bits = bytes[5];
  const bool has_scales = (bytes[6] & 1) != 0;
  if (!is_supported_bits(bits) || (bytes[6] & ~1u) != 0) {
    throw QTensorError(QTensorErrc::bad_header, "qtensor: bad header fields");
  }
  const std::size_t rows = get_u32(bytes.subspan(8));
  const std::size_t cols = get_u32(bytes.subspan(12));
  const std::size_t count = rows * cols;
  auto payload = bytes.subspan(kHeaderSize);
  if (payload.size() < count) throw QTensorError(QTensorErrc::truncated, "qtensor: truncated payload");

  std::vector<std::int8_t> data(count);
  const auto lo = min_signed(bits), hi = max_signed(bits);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = static_cast<std::int8_t>(payload[i]);
    if (data[i] < lo || data[i] > hi) {
      throw QTensorError(QTensorErrc::out_of_range, "qtensor: element " + std::to_string(data[i]) +
                                                        " at index " + std::to_string(i) +
                                                        " exceeds " + std::to_string(bits) + "-bit range");
    }
  }
  payload = payload.subspan(count);

  std::optional<GroupScales> scales;
  if (has_scales) {
    if (payload.size() % 8 != 0 || payload.empty() || rows == 0) {
      throw QTensorError(QTensorErrc::truncated, "qtensor: truncated scale block");
    }
    const std::size_t n = payload.size() / 8;
    const std::size_t groups = n / rows;
    if (groups == 0 || groups * rows != n) {
      throw QTensorError(QTensorErrc::bad_header, "qtensor: scale count is not a multiple of rows");
    }
    const std::size_t group_size = (cols + groups - 1) / groups;
    if (group_size == 0 || (cols + group_size - 1) / group_size != groups) {
      throw QTensorError(QTensorErrc::bad_header, "qtensor: scale count inconsistent with cols");
    }
    GroupScales gs{group_size, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t v = 0;
      for (int b = 0; b < 8; ++b) v |= std::uint64_t{payload[i * 8 + b]} << (8 * b);
      gs.values[i] = std::bit_cast<double>(v);
    }
    scales = std::move(gs);
  } else if (!payload.empty()) {
    throw QTensorError(QTensorErrc::bad_header, "qtensor: trailing bytes after payload");
  }
  return QuantMatrix(rows, cols, bits, std::move(data), std::move(scales));
}

QuantMatrix load_qtensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QTensorError(QTensorErrc::io, "qtensor: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_qtensor(bytes);
}

void save_qtensor(const QuantMatrix& m, const std::string& path) {
  const auto bytes = encode_qtensor(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw QTensorError(QTensorErrc::io, "qtensor: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw QTensorError(QTensorErrc::io, "qtensor: write failed for " + path);
}

QuantMatrix parse_csv_matrix(const std::string& text, int bits) {
  if (!is_supported_bits(bits)) throw std::invalid_argument("csv: unsupported bit width");
  std::vector<std::int8_t> data;
  std::size_t rows = 0, cols = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t row_cols = 0;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      if (b == std::string::npos) throw std::invalid_argument("csv: empty field on row " + std::to_string(rows));
      int v = 0;
      const char* first = field.data() + b;
      const char* last = field.data() + e + 1;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) throw std::invalid_argument("csv: not an integer: '" + field + "'");
      if (v < min_signed(bits) || v > max_signed(bits)) {
        throw std::invalid_argument("csv: element " + std::to_string(v) + " exceeds " + std::to_string(bits) +
                                    "-bit range");
      }
      data.push_back(static_cast<std::int8_t>(v));
      ++row_cols;
    }
    if (rows == 0) cols = row_cols;
    if (row_cols != cols) throw std::invalid_argument("csv: ragged row " + std::to_string(rows));
    ++rows;
  }
  if (rows == 0 || cols == 0) throw std::invalid_argument("csv: empty matrix");
  if (rows > kCsvMaxDim || cols > kCsvMaxDim) throw std::invalid_argument("csv: matrices are limited to 64 x 64");
  return QuantMatrix(rows, cols, bits, std::move(data));
}

QuantMatrix load_csv_matrix(const std::string& path, int bits) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv_matrix(ss.str(), bits);
}

}  // namespace transitive
