#include "transitive/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transitive/rng.hpp"

namespace transitive {

bool is_supported_bits(int bits) { return bits == 2 || bits == 3 || bits == 4 || bits == 8; }

namespace {

void require_bits(int bits) {
  if (!is_supported_bits(bits)) {
    throw std::invalid_argument("unsupported bit width " + std::to_string(bits) +
                                " (expected 2, 3, 4 or 8)");
  }
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

QuantMatrix::QuantMatrix(std::size_t rows, std::size_t cols, int bits, std::vector<std::int8_t> data,
                         std::optional<GroupScales> scales)
    : rows_(rows), cols_(cols), bits_(bits), data_(std::move(data)), scales_(std::move(scales)) {
  require_bits(bits);
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("QuantMatrix: data length " + std::to_string(data_.size()) +
                                " != rows * cols");
  }
  const auto lo = min_signed(bits), hi = max_signed(bits);
  for (std::int8_t v : data_) {
    if (v < lo || v > hi) {
      throw std::invalid_argument("QuantMatrix: element " + std::to_string(v) + " does not fit in " +
                                  std::to_string(bits) + " bits");
    }
  }
  if (scales_) {
    if (scales_->group_size == 0) throw std::invalid_argument("QuantMatrix: zero group size");
    if (scales_->values.size() != rows * ceil_div(cols, scales_->group_size)) {
      throw std::invalid_argument("QuantMatrix: scale count does not match rows * groups");
    }
  }
}

QuantMatrix QuantMatrix::zeros(std::size_t rows, std::size_t cols, int bits) {
  return QuantMatrix(rows, cols, bits, std::vector<std::int8_t>(rows * cols, 0));
}

AccumMatrix::AccumMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

void AccumMatrix::accumulate(std::size_t r, std::size_t c, std::int64_t delta) {
  auto& slot = data_[r * cols_ + c];
  const std::int64_t sum = std::int64_t{slot} + delta;
  if (sum < std::numeric_limits<std::int32_t>::min() || sum > std::numeric_limits<std::int32_t>::max()) {
    throw std::overflow_error("accumulator overflow at (" + std::to_string(r) + ", " +
                              std::to_string(c) + ")");
  }
  slot = static_cast<std::int32_t>(sum);
}

QuantMatrix gen_random(std::size_t rows, std::size_t cols, int bits, std::uint64_t seed) {
  require_bits(bits);
  if (rows == 0 || cols == 0) throw std::invalid_argument("gen_random: empty shape");
  Rng rng(seed);
  std::vector<std::int8_t> data(rows * cols);
  const auto half = std::int32_t{1} << (bits - 1);
  for (auto& v : data) {
    const auto u = static_cast<std::int32_t>(rng.bits(static_cast<unsigned>(bits)));
    v = static_cast<std::int8_t>(u >= half ? u - 2 * half : u);
  }
  return QuantMatrix(rows, cols, bits, std::move(data));
}

QuantMatrix quantize_uniform(const RealMatrix& values, int bits, std::size_t group_size) {
  require_bits(bits);
  if (values.rows == 0 || values.cols == 0 || values.data.empty()) {
    throw std::invalid_argument("quantize_uniform: empty input");
  }
  if (values.data.size() != values.rows * values.cols) {
    throw std::invalid_argument("quantize_uniform: data length != rows * cols");
  }
  if (group_size == 0 || (values.cols % group_size != 0 && group_size != values.cols)) {
    throw std::invalid_argument("quantize_uniform: group size must divide cols");
  }
  const std::size_t groups = values.cols / group_size;
  const double qmax = max_signed(bits);
  GroupScales scales{group_size, std::vector<double>(values.rows * groups, 0.0)};
  std::vector<std::int8_t> data(values.data.size(), 0);

  for (std::size_t r = 0; r < values.rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t begin = r * values.cols + g * group_size;
      double amax = 0.0;
      for (std::size_t i = 0; i < group_size; ++i) amax = std::max(amax, std::abs(values.data[begin + i]));
      const double scale = amax / qmax;
      scales.values[r * groups + g] = scale;
      if (scale == 0.0) continue;
      for (std::size_t i = 0; i < group_size; ++i) {
        double q = std::round(values.data[begin + i] / scale);
        q = std::clamp(q, double(min_signed(bits)), qmax);
        data[begin + i] = static_cast<std::int8_t>(q);
      }
    }
  }
  return QuantMatrix(values.rows, values.cols, bits, std::move(data), std::move(scales));
}

AccumMatrix reference_gemm(const QuantMatrix& w, const QuantMatrix& x) {
  if (w.cols() != x.rows()) {
    throw std::invalid_argument("reference_gemm: inner dimensions differ (" + std::to_string(w.cols()) +
                                " vs " + std::to_string(x.rows()) + ")");
  }
  AccumMatrix out(w.rows(), x.cols());
  std::vector<std::int64_t> acc(x.cols());
  for (std::size_t n = 0; n < w.rows(); ++n) {
    std::fill(acc.begin(), acc.end(), 0);
    for (std::size_t k = 0; k < w.cols(); ++k) {
      const std::int64_t wv = w.at(n, k);
      if (wv == 0) continue;
      const auto xrow = x.row(k);
      for (std::size_t m = 0; m < x.cols(); ++m) acc[m] += wv * xrow[m];
    }
    for (std::size_t m = 0; m < x.cols(); ++m) out.accumulate(n, m, acc[m]);
  }
  return out;
}

}  // namespace transitive
