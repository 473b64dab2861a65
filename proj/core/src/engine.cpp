#include "transitive/engine.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace transitive {

std::string_view to_string(OpClass c) {
  switch (c) {
    case OpClass::ZR: return "ZR";
    case OpClass::TR: return "TR";
    case OpClass::FR: return "FR";
    case OpClass::PR: return "PR";
  }
  return "?";
}

std::uint64_t PlanStep::ppe_cost() const {
  return std::max<std::uint64_t>(1, consumers.size()) + hops() - 1;
}

PatternCounts& PatternCounts::operator+=(const PatternCounts& o) {
  zr += o.zr;
  tr += o.tr;
  fr += o.fr;
  pr += o.pr;
  return *this;
}

ExecDiagnostics& ExecDiagnostics::operator+=(const ExecDiagnostics& o) {
  ppe_overflows += o.ppe_overflows;
  ape_overflows += o.ape_overflows;
  max_abs_partial = std::max(max_abs_partial, o.max_abs_partial);
  return *this;
}

OpCounts& OpCounts::operator+=(const OpCounts& o) {
  transitive += o.transitive;
  bitsparse += o.bitsparse;
  dense += o.dense;
  return *this;
}

std::size_t ExecutionPlan::step_count() const {
  std::size_t n = outliers.size();
  for (const auto& l : lanes) n += l.size();
  return n;
}

namespace {

template <typename F>
void for_each_step(const ExecutionPlan& p, F&& f) {
  for (const auto& lane : p.lanes)
    for (const auto& s : lane) f(s);
  for (const auto& s : p.outliers) f(s);
}

}  // namespace

PatternCounts ExecutionPlan::patterns() const {
  PatternCounts c;
  c.zr = zero_rows.size();
  for_each_step(*this, [&c](const PlanStep& s) {
    if (s.op_class == OpClass::TR) {
      ++c.tr;
    } else if (!s.consumers.empty()) {
      ++c.pr;
      c.fr += s.consumers.size() - 1;
    }
  });
  return c;
}

DistanceHistogram ExecutionPlan::distance_histogram() const {
  DistanceHistogram h{};
  for_each_step(*this, [&h](const PlanStep& s) {
    if (s.consumers.empty()) return;
    const std::size_t bucket = s.outlier ? 4 : std::min<std::size_t>(s.distance, 4);
    h[bucket] += s.consumers.size();
  });
  return h;
}

ExecutionPlan plan(const TransRowTile& tile, const ScoreboardInfo& si, const PlanOptions& options) {
  if (si.width() != tile.width) {
    throw std::invalid_argument("plan: SI width " + std::to_string(si.width()) + " != tile width " +
                                std::to_string(tile.width));
  }
  const unsigned width = tile.width;
  ExecutionPlan out;
  out.width = width;
  out.bits = tile.bits;
  out.mode = si.mode();
  out.n_offset = tile.n_offset;
  out.k_offset = tile.k_offset;
  out.rows = tile.rows;
  out.lanes.resize(width);

  std::map<TransRow, std::vector<std::uint32_t>> consumers;
  for (std::uint32_t i = 0; i < tile.rows.size(); ++i) {
    const TransRow v = tile.rows[i].value;
    if (v >> width) throw std::invalid_argument("plan: row value wider than tile");
    if (v == 0) out.zero_rows.push_back(i);
    consumers[v].push_back(i);
  }
  out.unique_values = consumers.size();
  auto present = [&consumers](TransRow v) { return v != 0 && consumers.count(v) != 0; };
  auto prefix_or_zero = [&si](TransRow v) { return si.prefix(v) == kNoNode ? TransRow{0} : si.prefix(v); };

  std::map<TransRow, PlanStep> steps;
  std::vector<PlanStep> outliers;
  auto make_step = [&](TransRow node, TransRow prefix) {
    PlanStep s;
    s.node = node;
    s.prefix = prefix;
    s.transparsity = node ^ prefix;
    auto it = consumers.find(node);
    if (it != consumers.end()) {
      s.consumers = it->second;
      s.op_class = OpClass::PR;
    } else {
      s.op_class = OpClass::TR;
    }
    return s;
  };

  for (const auto& [v, rows] : consumers) {
    if (v == 0) continue;
    if (si.prefix(v) == kNoNode) {
      PlanStep s = make_step(v, 0);
      s.outlier = true;
      s.distance = kInfiniteDistance;
      outliers.push_back(std::move(s));
      continue;
    }
    if (si.mode() == SiMode::dynamic_si) {
      for (TransRow cur = v; cur != 0 && !steps.count(cur);) {
        const TransRow p = prefix_or_zero(cur);
        steps.emplace(cur, make_step(cur, p));
        cur = p;
      }
    } else {
      const TransRow p = si.prefix(v);
      TransRow a = p;
      while (a != 0 && !present(a)) a = prefix_or_zero(a);
      if (a != p) ++out.si_misses;
      steps.emplace(v, make_step(v, a));
    }
  }

  // Distance: hops from each step to its nearest tile-present ancestor.
  for (auto& [v, s] : steps) {
    TransRow a = s.prefix;
    while (a != 0 && !present(a)) a = steps.at(a).prefix;
    s.distance = static_cast<std::uint8_t>(popcount(v ^ a));
  }

  std::vector<PlanStep*> order;
  order.reserve(steps.size());
  for (auto& [v, s] : steps) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const PlanStep* a, const PlanStep* b) { return popcount(a->node) < popcount(b->node); });
  std::sort(outliers.begin(), outliers.end(), [](const PlanStep& a, const PlanStep& b) {
    return popcount(a.node) != popcount(b.node) ? popcount(a.node) < popcount(b.node) : a.node < b.node;
  });

  std::vector<std::uint64_t> workload(width, 0);
  auto least_loaded = [&workload] {
    return static_cast<std::int16_t>(std::min_element(workload.begin(), workload.end()) - workload.begin());
  };
  auto weight = [&options](const PlanStep& s) -> std::uint64_t {
    return options.metric == BalanceMetric::node_count ? 1 : s.ppe_cost();
  };
  std::map<TransRow, std::int16_t> lane_of;
  for (PlanStep* s : order) {
    s->lane = s->prefix == 0 ? least_loaded() : lane_of.at(s->prefix);
    lane_of[s->node] = s->lane;
    workload[s->lane] += weight(*s);
    out.lanes[s->lane].push_back(std::move(*s));
  }
  for (auto& s : outliers) {
    s.lane = least_loaded();
    workload[s.lane] += weight(s);
  }
  out.outliers = std::move(outliers);
  return out;
}

ExecDiagnostics execute(const ExecutionPlan& plan, const QuantMatrix& x, AccumMatrix& out, std::size_t col_begin,
                        std::size_t col_end) {
  if (col_begin > col_end || col_end > x.cols() || out.cols() != x.cols()) {
    throw std::invalid_argument("execute: column range / output shape mismatch");
  }
  if (plan.k_offset >= x.rows()) throw std::invalid_argument("execute: tile k_offset beyond X rows");
  const std::size_t cols = col_end - col_begin;
  const unsigned width = plan.width;

  std::vector<std::int64_t> inputs(std::size_t{width} * cols, 0);
  for (unsigned p = 0; p < width; ++p) {
    const std::size_t k = plan.k_offset + p;
    if (k >= x.rows()) break;
    for (std::size_t c = 0; c < cols; ++c) inputs[p * cols + c] = x.at(k, col_begin + c);
  }

  constexpr std::int64_t ppe_lo = -(std::int64_t{1} << (kPpeBits - 1)), ppe_hi = (std::int64_t{1} << (kPpeBits - 1)) - 1;
  constexpr std::int64_t ape_lo = -(std::int64_t{1} << (kApeBits - 1)), ape_hi = (std::int64_t{1} << (kApeBits - 1)) - 1;

  ExecDiagnostics diag;
  // Prefix buffer: one partial vector per produced node, tagged with its lane.
  std::map<TransRow, std::pair<std::int16_t, std::vector<std::int64_t>>> buffer;
  const std::vector<std::int64_t> zeros(cols, 0);
  std::vector<std::int64_t> partial(cols);

  auto run_step = [&](const PlanStep& s, bool check_lane) {
    const std::vector<std::int64_t>* base = &zeros;
    if (s.prefix != 0) {
      auto it = buffer.find(s.prefix);
      if (it == buffer.end()) {
        throw std::logic_error("execute: prefix " + std::to_string(s.prefix) + " consumed before it was produced");
      }
      if (check_lane && it->second.first != s.lane) {
        throw std::logic_error("execute: cross-lane prefix read of node " + std::to_string(s.prefix));
      }
      base = &it->second.second;
    }
    partial = *base;
    for (std::uint32_t m = s.transparsity; m != 0; m &= m - 1) {
      const unsigned p = static_cast<unsigned>(__builtin_ctz(m));
      for (std::size_t c = 0; c < cols; ++c) partial[c] += inputs[p * cols + c];
    }
    for (std::int64_t v : partial) {
      if (v < ppe_lo || v > ppe_hi) ++diag.ppe_overflows;
      diag.max_abs_partial = std::max(diag.max_abs_partial, v < 0 ? -v : v);
    }
    for (std::uint32_t idx : s.consumers) {
      const auto& rec = plan.rows[idx];
      const std::int64_t w = level_weight(rec.bit_level, plan.bits);
      for (std::size_t c = 0; c < cols; ++c) {
        out.accumulate(rec.weight_row, col_begin + c, partial[c] * w);
        const std::int64_t acc = out.at(rec.weight_row, col_begin + c);
        if (acc < ape_lo || acc > ape_hi) ++diag.ape_overflows;
      }
    }
    buffer[s.node] = {s.lane, partial};
  };

  for (const auto& lane : plan.lanes)
    for (const auto& s : lane) run_step(s, true);
  for (const auto& s : plan.outliers) run_step(s, false);
  return diag;
}

ExecDiagnostics execute(const ExecutionPlan& plan, const QuantMatrix& x, AccumMatrix& out) {
  return execute(plan, x, out, 0, x.cols());
}

OpCounts count_ops(const ExecutionPlan& plan) {
  OpCounts ops;
  ops.dense = std::uint64_t{plan.rows.size()} * plan.width;
  for (const auto& r : plan.rows) ops.bitsparse += popcount(r.value);
  for_each_step(plan, [&ops](const PlanStep& s) {
    ops.transitive += s.hops();
    if (!s.consumers.empty()) ops.transitive += s.consumers.size() - 1;
  });
  return ops;
}

}  // namespace transitive
