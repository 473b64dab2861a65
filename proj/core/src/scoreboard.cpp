#include "transitive/scoreboard.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace transitive {

unsigned popcount(TransRow v) { return static_cast<unsigned>(std::popcount(v)); }

NodeTable::NodeTable(unsigned width) : width_(width) {
  if (!is_supported_width(width)) throw std::invalid_argument("NodeTable: unsupported width " + std::to_string(width));
  entries_.resize(std::size_t{1} << width);
  for (std::size_t v = 0; v < entries_.size(); ++v) entries_[v].node = static_cast<TransRow>(v);
}

void NodeTable::add(TransRow node, std::size_t occurrences) {
  auto& e = entries_.at(node);
  e.count = static_cast<std::uint8_t>(std::min<std::size_t>(kCountMax, e.count + occurrences));
}

std::vector<TransRow> hamming_order(unsigned width) {
  std::vector<TransRow> order(std::size_t{1} << width);
  for (std::size_t v = 0; v < order.size(); ++v) order[v] = static_cast<TransRow>(v);
  std::stable_sort(order.begin(), order.end(),
                   [](TransRow a, TransRow b) { return popcount(a) < popcount(b); });
  return order;
}

std::vector<TransRowRec> hamming_sort(std::span<const TransRowRec> rows) {
  std::vector<TransRowRec> out(rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const TransRowRec& a, const TransRowRec& b) { return popcount(a.value) < popcount(b.value); });
  return out;
}

NodeTable record(std::span<const TransRowRec> rows, unsigned width) {
  NodeTable table(width);
  for (const auto& r : rows) table.add(r.value);
  return table;
}

NodeTable record_values(std::span<const TransRow> values, unsigned width) {
  NodeTable table(width);
  for (TransRow v : values) table.add(v);
  return table;
}

void forward_pass(NodeTable& table) {
  const unsigned width = table.width();
  for (std::size_t v = 0; v < table.size(); ++v) {
    auto& e = table[static_cast<TransRow>(v)];
    e.distance = v == 0 ? 0 : kInfiniteDistance;
    e.prefix_bitmaps.fill(0);
  }
  for (TransRow idx : hamming_order(width)) {
    const auto& e = table[idx];
    unsigned dis = e.distance;
    if (dis >= kMaxDistance && idx != 0) continue;
    if (e.count > 0 || idx == 0) dis = 0;
    for (unsigned b = 0; b < width; ++b) {
      if (idx >> b & 1u) continue;
      auto& suffix = table[idx | (1u << b)];
      suffix.prefix_bitmaps[dis] |= 1u << b;
      suffix.distance = static_cast<std::uint8_t>(std::min<unsigned>(suffix.distance, dis + 1));
    }
  }
}

void backward_pass(NodeTable& table) {
  auto order = hamming_order(table.width());
  std::stable_sort(order.begin(), order.end(),
                   [](TransRow a, TransRow b) { return popcount(a) > popcount(b); });
  for (TransRow idx : order) {
    const auto& e = table[idx];
    const unsigned dis = e.distance;
    if (!(1 < dis && dis < kMaxDistance && e.count > 0)) continue;
    const std::uint32_t bitmap = e.prefix_bitmaps[dis - 1];
    // Smallest parent value: clear the highest candidate bit.
    const unsigned bit = 31u - static_cast<unsigned>(std::countl_zero(bitmap));
    auto& parent = table[idx & ~(1u << bit)];
    parent.suffix_bitmap |= 1u << bit;
    if (parent.count == 0) parent.materialized = true;
    parent.count = 1;
  }
  for (std::size_t v = 0; v < table.size(); ++v) {
    auto& pb = table[static_cast<TransRow>(v)].prefix_bitmaps;
    auto first = std::find_if(pb.begin(), pb.end(), [](std::uint32_t m) { return m != 0; });
    if (first != pb.end()) std::fill(first + 1, pb.end(), 0u);
  }
}

std::size_t HasseForest::tree_count() const {
  std::size_t n = 0;
  for (const auto& r : roots) n += r.size();
  return n;
}

std::size_t HasseForest::scheduled_count() const {
  return static_cast<std::size_t>(std::count_if(parent.begin(), parent.end(), [](TransRow p) { return p != kNoNode; }));
}

HasseForest build_forest(NodeTable& table, BalanceMetric metric) {
  const unsigned width = table.width();
  HasseForest forest;
  forest.width = width;
  forest.parent.assign(table.size(), kNoNode);
  forest.lane.assign(table.size(), -1);
  forest.roots.resize(width);
  forest.workload.assign(width, 0);

  auto least_loaded = [&forest] {
    return static_cast<std::int16_t>(std::min_element(forest.workload.begin(), forest.workload.end()) -
                                     forest.workload.begin());
  };

  for (TransRow v : hamming_order(width)) {
    auto& e = table[v];
    e.lane = -1;
    if (v == 0) continue;
    if (e.outlier()) {
      forest.outliers.push_back(v);
      continue;
    }
    if (!e.executed()) continue;

    TransRow chosen = kNoNode;
    std::int16_t lane = -1;
    if (e.level() == 1) {
      chosen = 0;
      lane = least_loaded();
      forest.roots[lane].push_back(v);
    } else {
      for (TransRow p : translate_prefix(v, e.prefix_bitmaps[e.distance - 1])) {
        if (!table[p].executed()) continue;
        const std::int16_t pl = forest.lane[p];
        const bool better = chosen == kNoNode || forest.workload[pl] < forest.workload[lane] ||
                            (forest.workload[pl] == forest.workload[lane] && (pl < lane || (pl == lane && p < chosen)));
        if (better) {
          chosen = p;
          lane = pl;
        }
      }
      if (chosen == kNoNode) throw std::logic_error("build_forest: executed node without an executed parent");
    }
    forest.parent[v] = chosen;
    forest.lane[v] = lane;
    e.lane = lane;
    const std::uint64_t weight = metric == BalanceMetric::node_count ? 1 : e.count + popcount(v ^ chosen) - 1;
    forest.workload[lane] += weight;
  }
  return forest;
}

std::vector<TransRow> translate_prefix(TransRow node, std::uint32_t bitmap) {
  if ((bitmap & ~node) != 0) throw std::invalid_argument("translate_prefix: bitmap bit not set in node");
  std::vector<TransRow> out;
  for (std::uint32_t m = bitmap; m != 0; m &= m - 1) out.push_back(node & ~(m & -m));
  return out;
}

std::vector<TransRow> translate_suffix(TransRow node, std::uint32_t bitmap, unsigned width) {
  const std::uint32_t full = width >= 32 ? ~0u : (1u << width) - 1;
  if ((bitmap & node) != 0 || (bitmap & ~full) != 0) {
    throw std::invalid_argument("translate_suffix: bitmap bit already set in node or out of width");
  }
  std::vector<TransRow> out;
  for (std::uint32_t m = bitmap; m != 0; m &= m - 1) out.push_back(node | (m & -m));
  return out;
}

ScoreboardRun run_scoreboard(NodeTable table, SiMode mode, BalanceMetric metric) {
  forward_pass(table);
  backward_pass(table);
  HasseForest forest = build_forest(table, metric);
  ScoreboardInfo si(table.width(), mode, forest.parent);
  return ScoreboardRun{std::move(table), std::move(forest), std::move(si)};
}

ScoreboardInfo build_dynamic_si(const TransRowTile& tile, BalanceMetric metric) {
  return run_scoreboard(record(tile.rows, tile.width), SiMode::dynamic_si, metric).si;
}

ScoreboardInfo build_static_si(std::span<const TransRowTile> tiles, unsigned width, BalanceMetric metric) {
  NodeTable table(width);
  for (const auto& tile : tiles) {
    if (tile.width != width) throw std::invalid_argument("build_static_si: tile width mismatch");
    for (const auto& r : tile.rows) table.add(r.value);
  }
  return run_scoreboard(std::move(table), SiMode::static_si, metric).si;
}

}  // namespace transitive
