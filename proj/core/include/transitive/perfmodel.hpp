#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "transitive/engine.hpp"
#include "transitive/matrix.hpp"
#include "transitive/scoreboard.hpp"

namespace transitive {

/// One TransArray unit plus the tiling loop around it.
///
/// Defaults: 8-bit TransRows, at most 256 TransRows per tile, T lanes of 32
/// PPE adders and 32 APE accumulators, six units.
struct ArchConfig {
  unsigned width = 8;
  std::size_t max_rows_per_tile = 256;  // TransRows (S * weight rows) per tile
  std::size_t ppe_adders_per_lane = 32;
  std::size_t ape_adders_per_lane = 32;
  std::size_t scoreboard_ways = 0;  // nodes retired per scoreboard cycle; 0 means T
  std::size_t num_units = 6;
  std::size_t tile_cols = 128;  // X columns per pipeline tile
  SiMode mode = SiMode::dynamic_si;
  BalanceMetric metric = BalanceMetric::count_and_hops;
  // Scoreboard sweep cost: sweep_passes * (T + 1) level steps
  // (forward + backward).
  std::size_t sweep_passes = 2;

  void validate() const;
};

struct StageCycles {
  std::uint64_t sb = 0;
  std::uint64_t ppe = 0;
  std::uint64_t ape = 0;

  std::uint64_t bottleneck() const;
  std::uint64_t sum() const { return sb + ppe + ape; }
};

// Depth of a bitonic sorting network on n keys padded to 2^k: k(k+1)/2.
std::uint64_t bitonic_stages(std::size_t n);

/// Cycle model of one pipeline tile over `cols` X columns.
///
///   sb  = bitonic_stages(n) + ceil(min(n, 2^T) / ways) + sweep_passes*(T+1)
///         (0 for a static SI, computed offline; charged once per tile)
///   ppe = passes * max over lanes of sum(step.ppe_cost())
///   ape = passes * max over lanes of sum(step consumers)
/// with n the tile's TransRows and passes = ceil(cols / 32). A tile without
/// rows costs nothing.
StageCycles stage_cycles(const ExecutionPlan& plan, const ArchConfig& cfg, std::size_t cols);

struct TileRecord {
  std::size_t n_offset = 0, k_offset = 0, m_offset = 0;
  std::size_t unit = 0;
  StageCycles cycles;
};

struct PerfReport {
  ArchConfig config;
  std::vector<TileRecord> tiles;
  std::uint64_t total_cycles = 0;
  std::uint64_t scoreboard_cycles = 0, ppe_cycles = 0, ape_cycles = 0;  // per-stage sums
  OpCounts ops;
  PatternCounts patterns;
  DistanceHistogram distances{};
  std::uint64_t unique_nodes = 0;  // summed over weight tiles
  std::uint64_t si_misses = 0;
  ExecDiagnostics diagnostics;

  double density() const { return ops.density(); }
  double bit_density() const { return ops.bit_density(); }
  std::string to_json(bool include_tiles = true) const;
};

// Pipelined total of a tile sequence on one unit:
// (first tile's non-bottleneck stages) + sum of per-tile bottlenecks.
std::uint64_t pipeline_total(const std::vector<StageCycles>& tiles);

struct SimulationResult {
  PerfReport report;
  AccumMatrix output;
};

/// Tiled transitive GEMM of W x X through the three-stage pipeline.
///
/// W is sliced into tiles of max_rows_per_tile / S weight rows by T columns;
/// each weight tile is planned once and executed for every block of
/// tile_cols X columns (one pipeline tile each). Pipeline tiles are dealt
/// round-robin over num_units; the reported total is the slowest unit.
/// `threads` > 1 fans weight-row blocks over worker threads; results do not
/// depend on it.
SimulationResult simulate(const QuantMatrix& w, const QuantMatrix& x, const ArchConfig& cfg, unsigned threads = 1);

// ---- Design-space exploration -----------------------------------------

struct DseConfig {
  std::vector<unsigned> widths{4, 8};
  std::vector<std::size_t> rows{16, 32, 64, 128, 256, 512, 1024};
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  SiMode mode = SiMode::dynamic_si;
  BalanceMetric metric = BalanceMetric::count_and_hops;
};

struct DseRow {
  unsigned width = 0;
  std::size_t rows = 0;
  std::size_t trial = 0;
  double density = 0, bit_density = 0;
  std::uint64_t unique_nodes = 0;
  double frac_dist_gt1 = 0, frac_dist_ge3 = 0;
  PatternCounts patterns;
  SiMode mode = SiMode::dynamic_si;
};

// One trial: `rows` uniform random T-bit TransRows in one tile.
DseRow dse_trial(unsigned width, std::size_t rows, std::size_t trial, std::uint64_t seed, SiMode mode,
                 BalanceMetric metric = BalanceMetric::count_and_hops);
std::vector<DseRow> dse_sweep(const DseConfig& cfg);

struct DseSummary {
  unsigned width = 0;
  std::size_t rows = 0;
  std::size_t trials = 0;
  double density_mean = 0, density_std = 0;
  double unique_mean = 0, unique_std = 0;
  double frac_dist_gt1_mean = 0, frac_dist_ge3_mean = 0;
};
std::vector<DseSummary> summarize(const std::vector<DseRow>& rows);

inline constexpr const char* kDseCsvHeader =
    "T,rows,trial,density,bit_density,unique_nodes,frac_dist_gt1,frac_dist_ge3,zr,tr,fr,pr,si_mode";
void write_dse_csv(std::ostream& os, const std::vector<DseRow>& rows);
void write_dse_summary_csv(std::ostream& os, const std::vector<DseSummary>& rows);

std::string_view to_string(SiMode mode);
SiMode parse_si_mode(std::string_view text);

}  // namespace transitive
