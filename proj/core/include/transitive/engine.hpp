#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "transitive/bitslice.hpp"
#include "transitive/matrix.hpp"
#include "transitive/scoreboard.hpp"

namespace transitive {

// ZR: zero row, skipped. TR: node materialized only as a prefix.
// FR: duplicate row reusing a full result. PR: row computed from a prefix.
enum class OpClass : std::uint8_t { ZR, TR, FR, PR };
std::string_view to_string(OpClass c);

/// One node computed by the PPE: partial(node) = partial(prefix) + inputs at
/// the transparsity bits. consumers index into ExecutionPlan::rows; the first
/// consumer is the PR row, the rest are FR rows.
struct PlanStep {
  TransRow node = 0;
  TransRow prefix = 0;
  TransRow transparsity = 0;  // node ^ prefix
  OpClass op_class = OpClass::PR;
  bool outlier = false;
  // Hops to the nearest ancestor present in the tile (or node 0);
  // kInfiniteDistance for outliers.
  std::uint8_t distance = 0;
  std::int16_t lane = -1;
  std::vector<std::uint32_t> consumers;

  unsigned hops() const { return popcount(transparsity); }
  // PPE cycles charged to this step: one per consumer row (at least one), plus
  // hops beyond the first.
  std::uint64_t ppe_cost() const;
};

struct PatternCounts {
  std::uint64_t zr = 0, tr = 0, fr = 0, pr = 0;

  PatternCounts& operator+=(const PatternCounts& o);
  bool operator==(const PatternCounts&) const = default;
};

// Row counts by distance: index 1, 2, 3, and 4 for ">= 4 / outlier".
using DistanceHistogram = std::array<std::uint64_t, 5>;

/// Lane-partitioned schedule for one tile.
///
/// Invariants: within a lane steps are in Hamming order, so every prefix is
/// produced before use; a step's prefix is node 0 or a node on the same lane;
/// every row appears in exactly one consumer list or in zero_rows.
struct ExecutionPlan {
  unsigned width = 0;
  int bits = 0;
  SiMode mode = SiMode::dynamic_si;
  std::size_t n_offset = 0;
  std::size_t k_offset = 0;
  std::vector<TransRowRec> rows;
  std::vector<std::vector<PlanStep>> lanes;
  std::vector<PlanStep> outliers;
  std::vector<std::uint32_t> zero_rows;
  std::uint64_t si_misses = 0;
  std::uint64_t unique_values = 0;  // distinct row values, zero included

  std::size_t step_count() const;
  PatternCounts patterns() const;
  DistanceHistogram distance_histogram() const;
};

struct PlanOptions {
  BalanceMetric metric = BalanceMetric::count_and_hops;
};

/// Builds the execution plan of a tile under an SI.
///
/// Dynamic SI: the SI chain of every present node is materialized; chain
/// nodes absent from the tile become TR steps. Static SI: the chain is walked
/// until a node present in the tile (or node 0) is found and the step jumps
/// there directly; each jump past a missing prefix counts one SI miss.
/// Present nodes without an SI prefix are outliers computed from scratch.
/// Throws std::invalid_argument if the SI and tile widths differ.
ExecutionPlan plan(const TransRowTile& tile, const ScoreboardInfo& si, const PlanOptions& options = {});

// Hardware precision limits monitored during execution.
inline constexpr int kPpeBits = 12;
inline constexpr int kApeBits = 24;

struct ExecDiagnostics {
  std::uint64_t ppe_overflows = 0;  // partials outside signed 12-bit
  std::uint64_t ape_overflows = 0;  // accumulations outside signed 24-bit
  std::int64_t max_abs_partial = 0;

  ExecDiagnostics& operator+=(const ExecDiagnostics& o);
};

/// Runs a plan against columns [col_begin, col_end) of X, accumulating into
/// out (N x M). Reads X rows k_offset .. k_offset + T - 1, treating rows past
/// the end of X as zero padding. Arithmetic is exact; the 12/24-bit widths are
/// only monitored. Throws std::logic_error if a step reads a prefix that was
/// not produced earlier on its own lane.
ExecDiagnostics execute(const ExecutionPlan& plan, const QuantMatrix& x, AccumMatrix& out, std::size_t col_begin,
                        std::size_t col_end);
ExecDiagnostics execute(const ExecutionPlan& plan, const QuantMatrix& x, AccumMatrix& out);

struct OpCounts {
  std::uint64_t transitive = 0;
  std::uint64_t bitsparse = 0;
  std::uint64_t dense = 0;

  double density() const { return dense == 0 ? 0.0 : double(transitive) / double(dense); }
  double bit_density() const { return dense == 0 ? 0.0 : double(bitsparse) / double(dense); }
  OpCounts& operator+=(const OpCounts& o);
  bool operator==(const OpCounts&) const = default;
};

// Additions per output column: popcount(transparsity) per step, 1 per FR row,
// nothing for ZR rows. bitsparse = sum of row popcounts; dense = rows * T.
OpCounts count_ops(const ExecutionPlan& plan);

}  // namespace transitive
