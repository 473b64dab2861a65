#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "transitive/bitslice.hpp"

namespace transitive {

// Forward propagation stops at this distance; present nodes at or beyond it
// are outliers executed from scratch.
inline constexpr unsigned kMaxDistance = 4;
inline constexpr std::uint8_t kInfiniteDistance = 0xFF;
// Width of the hardware Count field.
inline constexpr std::uint8_t kCountMax = 255;
inline constexpr TransRow kNoNode = 0xFFFFFFFFu;

enum class SiMode : std::uint8_t { static_si = 0, dynamic_si = 1 };

// Lane balancing weight. count_and_hops charges a node its (saturated) count
// plus hops beyond the first, i.e. its PPE cycles; node_count charges 1.
enum class BalanceMetric : std::uint8_t { count_and_hops, node_count };

unsigned popcount(TransRow v);

/// One Hasse-graph node in the scoreboard.
struct ScoreboardEntry {
  TransRow node = 0;
  std::uint8_t count = 0;
  std::uint8_t distance = kInfiniteDistance;
  // prefix_bitmaps[d-1]: bit positions whose 1->0 flip gives an immediate
  // parent through which a computed ancestor at distance d is reachable.
  std::array<std::uint32_t, kMaxDistance> prefix_bitmaps{};
  // 0->1 flips toward suffixes that requested this node in the backward pass.
  std::uint32_t suffix_bitmap = 0;
  std::int16_t lane = -1;
  bool materialized = false;

  unsigned level() const { return popcount(node); }
  bool executed() const { return count > 0 && node != 0 && distance < kMaxDistance; }
  bool outlier() const { return count > 0 && node != 0 && distance >= kMaxDistance; }
};

/// Scoreboard state for every node of the width-T Hasse graph.
class NodeTable {
 public:
  explicit NodeTable(unsigned width);

  unsigned width() const { return width_; }
  std::size_t size() const { return entries_.size(); }
  ScoreboardEntry& operator[](TransRow node) { return entries_[node]; }
  const ScoreboardEntry& operator[](TransRow node) const { return entries_[node]; }
  std::span<const ScoreboardEntry> entries() const { return entries_; }

  // Adds occurrences of node, saturating at kCountMax.
  void add(TransRow node, std::size_t occurrences = 1);

 private:
  unsigned width_;
  std::vector<ScoreboardEntry> entries_;
};

// All 2^width node values by (popcount, value).
std::vector<TransRow> hamming_order(unsigned width);

// Stable sort by popcount.
std::vector<TransRowRec> hamming_sort(std::span<const TransRowRec> rows);

NodeTable record(std::span<const TransRowRec> rows, unsigned width);
NodeTable record_values(std::span<const TransRow> values, unsigned width);

/// Forward pass over the Hasse graph in Hamming order.
///
/// Node 0 and every node with a count act as computed prefixes (outgoing
/// distance 0); absent nodes forward their own distance. Every suffix records
/// the flip bit in prefix_bitmaps[distance] and keeps the minimum distance.
/// Nodes at distance >= kMaxDistance do not propagate.
void forward_pass(NodeTable& table);

/// Backward pass in reverse Hamming order.
///
/// Each counted node with 1 < distance < kMaxDistance selects one parent from
/// its smallest-distance prefix bitmap (the smallest parent value, i.e. the
/// highest flip bit), records itself in that parent's suffix bitmap and sets
/// the parent's count to 1. Parents are visited later, so chains materialize
/// down to a computed node. Finally only the smallest-distance prefix bitmap
/// is kept on each node.
void backward_pass(NodeTable& table);

struct HasseForest {
  unsigned width = 0;
  std::vector<TransRow> parent;            // per node; kNoNode if not scheduled
  std::vector<std::int16_t> lane;          // per node; -1 if not scheduled
  std::vector<std::vector<TransRow>> roots;  // per lane, level-1 nodes
  std::vector<std::uint64_t> workload;     // per lane
  std::vector<TransRow> outliers;          // counted nodes at distance >= kMaxDistance

  std::size_t tree_count() const;
  std::size_t scheduled_count() const;
};

/// Assigns every executed node one parent and one lane.
///
/// Nodes are visited in Hamming order. Level-1 nodes become roots on the
/// least-loaded lane; deeper nodes pick, among executed parents in their kept
/// prefix bitmap, the one whose lane carries the smallest workload (ties: lower
/// lane id, then smaller parent value) and inherit that lane. Writes lane ids
/// back into the table.
HasseForest build_forest(NodeTable& table, BalanceMetric metric = BalanceMetric::count_and_hops);

// Parents of node for each set bit of bitmap (1->0 flip). Throws
// std::invalid_argument if a bitmap bit is clear in node.
std::vector<TransRow> translate_prefix(TransRow node, std::uint32_t bitmap);
// Children of node for each set bit of bitmap (0->1 flip). Throws if a
// bitmap bit is already set in node or lies outside width.
std::vector<TransRow> translate_suffix(TransRow node, std::uint32_t bitmap, unsigned width);

/// Scoreboard Information: node -> chosen prefix table.
///
/// Serialized as an 8-byte header ("TASI", T, mode, 2 reserved) followed by
/// 2^T little-endian bit-packed (node, prefix) pairs of T bits each, i.e.
/// 2*T*2^T payload bits. An unscheduled node is stored with prefix == node.
class ScoreboardInfo {
 public:
  static constexpr std::size_t kHeaderBytes = 8;

  ScoreboardInfo(unsigned width, SiMode mode);
  ScoreboardInfo(unsigned width, SiMode mode, std::vector<TransRow> prefix);

  unsigned width() const { return width_; }
  SiMode mode() const { return mode_; }
  // kNoNode when the node is not scheduled (absent, zero or outlier).
  TransRow prefix(TransRow node) const { return prefix_[node]; }
  std::span<const TransRow> table() const { return prefix_; }

  static std::size_t payload_bits(unsigned width) { return 2ull * width * (std::size_t{1} << width); }
  std::vector<std::uint8_t> serialize() const;
  static ScoreboardInfo deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const ScoreboardInfo&) const = default;

 private:
  unsigned width_;
  SiMode mode_;
  std::vector<TransRow> prefix_;
};

// Full pipeline result, kept for inspection and statistics.
struct ScoreboardRun {
  NodeTable table;
  HasseForest forest;
  ScoreboardInfo si;
};

ScoreboardRun run_scoreboard(NodeTable table, SiMode mode, BalanceMetric metric = BalanceMetric::count_and_hops);

// Per-sub-tile SI over exactly this tile's rows.
ScoreboardInfo build_dynamic_si(const TransRowTile& tile, BalanceMetric metric = BalanceMetric::count_and_hops);
// One SI for a whole tensor: counts aggregated over every tile.
ScoreboardInfo build_static_si(std::span<const TransRowTile> tiles, unsigned width,
                               BalanceMetric metric = BalanceMetric::count_and_hops);

}  // namespace transitive
