#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "transitive/perfmodel.hpp"
#include "transitive/rng.hpp"

namespace transitive {

DseRow dse_trial(unsigned width, std::size_t rows, std::size_t trial, std::uint64_t seed, SiMode mode,
                 BalanceMetric metric) {
  Rng rng(derive_seed(seed, width, rows, trial));
  std::vector<TransRow> values(rows);
  for (auto& v : values) v = static_cast<TransRow>(rng.bits(width));
  const TransRowTile tile = make_tile(values, width);

  const ScoreboardInfo si = mode == SiMode::dynamic_si ? build_dynamic_si(tile, metric)
                                                       : build_static_si(std::span(&tile, 1), width, metric);
  const ExecutionPlan p = plan(tile, si, PlanOptions{metric});
  const OpCounts ops = count_ops(p);
  const DistanceHistogram h = p.distance_histogram();
  const std::uint64_t executed = h[1] + h[2] + h[3] + h[4];

  DseRow row;
  row.width = width;
  row.rows = rows;
  row.trial = trial;
  row.density = ops.density();
  row.bit_density = ops.bit_density();
  row.unique_nodes = p.unique_values;
  row.frac_dist_gt1 = executed == 0 ? 0.0 : double(h[2] + h[3] + h[4]) / double(executed);
  row.frac_dist_ge3 = executed == 0 ? 0.0 : double(h[3] + h[4]) / double(executed);
  row.patterns = p.patterns();
  row.mode = mode;
  return row;
}

std::vector<DseRow> dse_sweep(const DseConfig& cfg) {
  std::vector<DseRow> out;
  out.reserve(cfg.widths.size() * cfg.rows.size() * cfg.trials);
  for (unsigned width : cfg.widths)
    for (std::size_t rows : cfg.rows)
      for (std::size_t t = 0; t < cfg.trials; ++t) out.push_back(dse_trial(width, rows, t, cfg.seed, cfg.mode, cfg.metric));
  return out;
}

std::vector<DseSummary> summarize(const std::vector<DseRow>& rows) {
  struct Acc {
    std::size_t n = 0;
    double d = 0, d2 = 0, u = 0, u2 = 0, g1 = 0, g3 = 0;
  };
  std::map<std::pair<unsigned, std::size_t>, Acc> groups;
  for (const auto& r : rows) {
    auto& a = groups[{r.width, r.rows}];
    ++a.n;
    a.d += r.density;
    a.d2 += r.density * r.density;
    a.u += double(r.unique_nodes);
    a.u2 += double(r.unique_nodes) * double(r.unique_nodes);
    a.g1 += r.frac_dist_gt1;
    a.g3 += r.frac_dist_ge3;
  }
  auto stddev = [](double sum, double sum2, std::size_t n) {
    if (n < 2) return 0.0;
    const double mean = sum / double(n);
    return std::sqrt(std::max(0.0, (sum2 - double(n) * mean * mean) / double(n - 1)));
  };
  std::vector<DseSummary> out;
  for (const auto& [key, a] : groups) {
    DseSummary s;
    s.width = key.first;
    s.rows = key.second;
    s.trials = a.n;
    s.density_mean = a.d / double(a.n);
    s.density_std = stddev(a.d, a.d2, a.n);
    s.unique_mean = a.u / double(a.n);
    s.unique_std = stddev(a.u, a.u2, a.n);
    s.frac_dist_gt1_mean = a.g1 / double(a.n);
    s.frac_dist_ge3_mean = a.g3 / double(a.n);
    out.push_back(s);
  }
  return out;
}

namespace {

// Fixed 6-digit formatting keeps CSV bytes identical across runs.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_dse_csv(std::ostream& os, const std::vector<DseRow>& rows) {
  os << kDseCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.width << ',' << r.rows << ',' << r.trial << ',' << fmt(r.density) << ',' << fmt(r.bit_density) << ','
       << r.unique_nodes << ',' << fmt(r.frac_dist_gt1) << ',' << fmt(r.frac_dist_ge3) << ',' << r.patterns.zr << ','
       << r.patterns.tr << ',' << r.patterns.fr << ',' << r.patterns.pr << ',' << to_string(r.mode) << '\n';
  }
}

void write_dse_summary_csv(std::ostream& os, const std::vector<DseSummary>& rows) {
  os << "T,rows,trials,density_mean,density_std,unique_mean,unique_std,frac_dist_gt1_mean,frac_dist_ge3_mean\n";
  for (const auto& s : rows) {
    os << s.width << ',' << s.rows << ',' << s.trials << ',' << fmt(s.density_mean) << ',' << fmt(s.density_std) << ','
       << fmt(s.unique_mean) << ',' << fmt(s.unique_std) << ',' << fmt(s.frac_dist_gt1_mean) << ','
       << fmt(s.frac_dist_ge3_mean) << '\n';
  }
}

}  // namespace transitive
