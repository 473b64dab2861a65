#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace transitive {

// Supported two's-complement operand widths.
bool is_supported_bits(int bits);
inline std::int32_t min_signed(int bits) { return -(std::int32_t{1} << (bits - 1)); }
inline std::int32_t max_signed(int bits) { return (std::int32_t{1} << (bits - 1)) - 1; }

// Per-row, per-column-group scale factors. Carried as metadata only; the
// integer pipeline never reads them.
struct GroupScales {
  std::size_t group_size = 0;
  std::vector<double> values;  // rows * ceil(cols / group_size), row-major

  bool operator==(const GroupScales&) const = default;
};

/// Row-major matrix of S-bit two's-complement integers, S in {2, 3, 4, 8}.
///
/// Immutable after construction; the constructor enforces that every
/// element fits in S bits and that scale metadata has the expected length.
class QuantMatrix {
 public:
  QuantMatrix(std::size_t rows, std::size_t cols, int bits, std::vector<std::int8_t> data,
              std::optional<GroupScales> scales = std::nullopt);

  // All-zero matrix.
  static QuantMatrix zeros(std::size_t rows, std::size_t cols, int bits);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int bits() const { return bits_; }

  std::int8_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const std::int8_t> row(std::size_t r) const {
    return std::span<const std::int8_t>(data_).subspan(r * cols_, cols_);
  }
  std::span<const std::int8_t> data() const { return data_; }

  const std::optional<GroupScales>& scales() const { return scales_; }

  bool operator==(const QuantMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  int bits_;
  std::vector<std::int8_t> data_;
  std::optional<GroupScales> scales_;
};

// Dense row-major real matrix; input of quantize_uniform.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

/// Output partial sums. 32-bit signed; producers check for overflow
/// instead of wrapping.
class AccumMatrix {
 public:
  AccumMatrix() = default;
  AccumMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::int32_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::int32_t& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const std::int32_t> data() const { return data_; }

  // Adds delta to (r, c); throws std::overflow_error if the sum leaves int32.
  void accumulate(std::size_t r, std::size_t c, std::int64_t delta);

  bool operator==(const AccumMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int32_t> data_;
};

// Elements i.i.d. uniform over the S-bit range. Generator: Rng (mt19937_64
// seeded through SplitMix64), high S bits of each 64-bit draw.
QuantMatrix gen_random(std::size_t rows, std::size_t cols, int bits, std::uint64_t seed);

// Symmetric per-group quantizer: scale = max|v| / (2^(S-1) - 1), elements
// round(v / scale) (half away from zero) clamped to the S-bit range.
QuantMatrix quantize_uniform(const RealMatrix& values, int bits, std::size_t group_size);

// Exact integer GEMM, W[N x K] * X[K x M]. Throws std::invalid_argument on a
// shape mismatch and std::overflow_error if an output leaves int32.
AccumMatrix reference_gemm(const QuantMatrix& w, const QuantMatrix& x);

// ---- QTensor files -------------------------------------------------------

enum class QTensorErrc { bad_magic, unsupported_version, bad_header, truncated, out_of_range, io };

class QTensorError : public std::runtime_error {
 public:
  QTensorError(QTensorErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  QTensorErrc code() const { return code_; }

 private:
  QTensorErrc code_;
};

std::vector<std::uint8_t> encode_qtensor(const QuantMatrix& m);
QuantMatrix decode_qtensor(std::span<const std::uint8_t> bytes);

QuantMatrix load_qtensor(const std::string& path);
void save_qtensor(const QuantMatrix& m, const std::string& path);

// Comma-separated integers, one row per line; at most 64 x 64.
QuantMatrix parse_csv_matrix(const std::string& text, int bits);
QuantMatrix load_csv_matrix(const std::string& path, int bits);

}  // namespace transitive
