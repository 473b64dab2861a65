#include "transitive/perfmodel.hpp"

#include <algorithm>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace transitive {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

void ArchConfig::validate() const {
  if (!is_supported_width(width)) throw std::invalid_argument("ArchConfig: unsupported width");
  if (max_rows_per_tile == 0 || ppe_adders_per_lane == 0 || ape_adders_per_lane == 0 || num_units == 0 ||
      tile_cols == 0) {
    throw std::invalid_argument("ArchConfig: sizes must be positive");
  }
}

std::uint64_t StageCycles::bottleneck() const { return std::max({sb, ppe, ape}); }

std::uint64_t bitonic_stages(std::size_t n) {
  std::uint64_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k * (k + 1) / 2;
}

StageCycles stage_cycles(const ExecutionPlan& plan, const ArchConfig& cfg, std::size_t cols) {
  StageCycles c;
  const std::size_t n = plan.rows.size();
  if (n == 0 || cols == 0) return c;

  if (cfg.mode == SiMode::dynamic_si) {
    const std::uint64_t ways = cfg.scoreboard_ways == 0 ? plan.width : cfg.scoreboard_ways;
    const std::uint64_t unique_cap = std::min<std::uint64_t>(n, std::uint64_t{1} << plan.width);
    c.sb = bitonic_stages(n) + ceil_div(unique_cap, ways) + cfg.sweep_passes * (plan.width + 1);
  }

  std::vector<std::uint64_t> ppe(plan.width, 0), ape(plan.width, 0);
  auto charge = [&](const PlanStep& s) {
    ppe[s.lane] += s.ppe_cost();
    ape[s.lane] += s.consumers.size();
  };
  for (const auto& lane : plan.lanes)
    for (const auto& s : lane) charge(s);
  for (const auto& s : plan.outliers) charge(s);

  c.ppe = ceil_div(cols, cfg.ppe_adders_per_lane) * *std::max_element(ppe.begin(), ppe.end());
  c.ape = ceil_div(cols, cfg.ape_adders_per_lane) * *std::max_element(ape.begin(), ape.end());
  return c;
}

std::uint64_t pipeline_total(const std::vector<StageCycles>& tiles) {
  if (tiles.empty()) return 0;
  std::uint64_t total = tiles.front().sum() - tiles.front().bottleneck();
  for (const auto& t : tiles) total += t.bottleneck();
  return total;
}

namespace {

struct WeightTileResult {
  OpCounts ops;
  PatternCounts patterns;
  DistanceHistogram distances{};
  std::uint64_t unique = 0;
  std::uint64_t misses = 0;
  ExecDiagnostics diag;
  std::vector<TileRecord> pipeline;
};

}  // namespace

SimulationResult simulate(const QuantMatrix& w, const QuantMatrix& x, const ArchConfig& cfg, unsigned threads) {
  cfg.validate();
  if (w.cols() != x.rows()) {
    throw std::invalid_argument("simulate: inner dimensions differ (" + std::to_string(w.cols()) + " vs " +
                                std::to_string(x.rows()) + ")");
  }
  const std::size_t n_block = std::max<std::size_t>(1, cfg.max_rows_per_tile / static_cast<std::size_t>(w.bits()));
  const auto tiles = slice(w, cfg.width, n_block);
  const std::size_t k_blocks = ceil_div(w.cols(), cfg.width);
  const std::size_t n_blocks = tiles.size() / k_blocks;

  std::optional<ScoreboardInfo> static_si;
  if (cfg.mode == SiMode::static_si) static_si = build_static_si(tiles, cfg.width, cfg.metric);

  SimulationResult result{PerfReport{}, AccumMatrix(w.rows(), x.cols())};
  std::vector<WeightTileResult> per_tile(tiles.size());

  auto work = [&](std::size_t first_block, std::size_t stride) {
    for (std::size_t b = first_block; b < n_blocks; b += stride) {
      for (std::size_t k = 0; k < k_blocks; ++k) {
        const std::size_t idx = b * k_blocks + k;
        const auto& tile = tiles[idx];
        const ScoreboardInfo si = static_si ? *static_si : build_dynamic_si(tile, cfg.metric);
        const ExecutionPlan p = plan(tile, si, PlanOptions{cfg.metric});
        auto& r = per_tile[idx];
        r.ops = count_ops(p);
        r.patterns = p.patterns();
        r.distances = p.distance_histogram();
        r.unique = p.unique_values;
        r.misses = p.si_misses;
        for (std::size_t m0 = 0; m0 < x.cols(); m0 += cfg.tile_cols) {
          const std::size_t m1 = std::min(x.cols(), m0 + cfg.tile_cols);
          r.diag += execute(p, x, result.output, m0, m1);
          r.pipeline.push_back({tile.n_offset, tile.k_offset, m0, 0, stage_cycles(p, cfg, m1 - m0)});
        }
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, n_blocks));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, workers);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  PerfReport& rep = result.report;
  rep.config = cfg;
  std::vector<std::vector<StageCycles>> per_unit(cfg.num_units);
  for (auto& r : per_tile) {
    rep.ops += r.ops;
    rep.patterns += r.patterns;
    for (std::size_t i = 0; i < rep.distances.size(); ++i) rep.distances[i] += r.distances[i];
    rep.unique_nodes += r.unique;
    rep.si_misses += r.misses;
    rep.diagnostics += r.diag;
    for (auto& rec : r.pipeline) {
      rec.unit = rep.tiles.size() % cfg.num_units;
      per_unit[rec.unit].push_back(rec.cycles);
      rep.scoreboard_cycles += rec.cycles.sb;
      rep.ppe_cycles += rec.cycles.ppe;
      rep.ape_cycles += rec.cycles.ape;
      rep.tiles.push_back(rec);
    }
  }
  for (const auto& u : per_unit) rep.total_cycles = std::max(rep.total_cycles, pipeline_total(u));
  return result;
}

std::string_view to_string(SiMode mode) { return mode == SiMode::static_si ? "static" : "dynamic"; }

SiMode parse_si_mode(std::string_view text) {
  if (text == "static") return SiMode::static_si;
  if (text == "dynamic") return SiMode::dynamic_si;
  throw std::invalid_argument("unknown SI mode '" + std::string(text) + "'");
}

std::string PerfReport::to_json(bool include_tiles) const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["config"] = {{"T", config.width},
                 {"max_rows_per_tile", config.max_rows_per_tile},
                 {"ppe_array", {config.width, config.ppe_adders_per_lane}},
                 {"ape_array", {config.width, config.ape_adders_per_lane}},
                 {"scoreboard_ways", config.scoreboard_ways == 0 ? config.width : config.scoreboard_ways},
                 {"num_units", config.num_units},
                 {"tile_cols", config.tile_cols},
                 {"si_mode", std::string(to_string(config.mode))},
                 {"balance", config.metric == BalanceMetric::node_count ? "node_count" : "count_and_hops"}};
  j["total_cycles"] = total_cycles;
  j["stage_cycles"] = {{"scoreboard", scoreboard_cycles}, {"ppe", ppe_cycles}, {"ape", ape_cycles}};
  j["ops"] = {{"transitive", ops.transitive}, {"bitsparse", ops.bitsparse}, {"dense", ops.dense}};
  j["density"] = density();
  j["bit_density"] = bit_density();
  j["patterns"] = {{"ZR", patterns.zr}, {"TR", patterns.tr}, {"FR", patterns.fr}, {"PR", patterns.pr}};
  j["distance_histogram"] = {
      {"1", distances[1]}, {"2", distances[2]}, {"3", distances[3]}, {"4+", distances[4]}};
  j["unique_nodes"] = unique_nodes;
  j["si_misses"] = si_misses;
  j["diagnostics"] = {{"ppe_overflows_12bit", diagnostics.ppe_overflows},
                      {"ape_overflows_24bit", diagnostics.ape_overflows},
                      {"max_abs_partial", diagnostics.max_abs_partial}};
  j["tile_count"] = tiles.size();
  if (include_tiles) {
    auto arr = ordered_json::array();
    for (const auto& t : tiles) {
      arr.push_back({{"n_offset", t.n_offset},
                     {"k_offset", t.k_offset},
                     {"m_offset", t.m_offset},
                     {"unit", t.unit},
                     {"scoreboard_cycles", t.cycles.sb},
                     {"ppe_cycles", t.cycles.ppe},
                     {"ape_cycles", t.cycles.ape}});
    }
    j["tiles"] = std::move(arr);
  }
  return j.dump(2);
}

}  // namespace transitive
