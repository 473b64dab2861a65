#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "transitive/perfmodel.hpp"
#include "transitive/rng.hpp"

namespace transitive::cli {

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// One matrix operand: a file (.qt or CSV) or an inline generator spec.
struct Operand {
  std::string path;
  std::string gen;  // "rows,cols,bits,seed"
  int csv_bits = 8;

  bool given() const { return !path.empty() || !gen.empty(); }
};

QuantMatrix generate(const std::string& spec) {
  std::vector<std::uint64_t> v;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad generator spec '" + spec + "' (want rows,cols,bits,seed)");
    }
  }
  if (v.size() != 4) throw UsageError("bad generator spec '" + spec + "' (want rows,cols,bits,seed)");
  return gen_random(v[0], v[1], static_cast<int>(v[2]), v[3]);
}

QuantMatrix load(const Operand& op) {
  if (!op.gen.empty()) return generate(op.gen);
  const auto& p = op.path;
  const bool csv = p.size() >= 4 && p.compare(p.size() - 4, 4, ".csv") == 0;
  return csv ? load_csv_matrix(p, op.csv_bits) : load_qtensor(p);
}

void add_operand(CLI::App& cmd, const std::string& name, Operand& op, const std::string& what) {
  auto* file = cmd.add_option("--" + name, op.path, what + " file (.qt, or .csv with --" + name + "-bits)");
  auto* gen = cmd.add_option("--" + name + "-gen", op.gen, what + " generator: rows,cols,bits,seed");
  file->excludes(gen);
  cmd.add_option("--" + name + "-bits", op.csv_bits, "bit width of a CSV " + what)->capture_default_str();
}

struct Common {
  unsigned width = 8;
  std::size_t tile_rows = 256;
  std::string si = "dynamic";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_path;
  std::string format;
};

// The DSE sweep takes lists for --T and --tile-rows instead.
void add_common(CLI::App& cmd, Common& c, bool single_tile_shape = true) {
  if (single_tile_shape) {
    cmd.add_option("--T", c.width, "TransRow width")->capture_default_str();
    cmd.add_option("--tile-rows", c.tile_rows, "TransRows per weight tile")->capture_default_str();
  }
  cmd.add_option("--si", c.si, "scoreboard information mode")
      ->check(CLI::IsMember({"static", "dynamic"}))
      ->capture_default_str();
  cmd.add_option("--seed", c.seed, "seed for generated operands")->capture_default_str();
  cmd.add_option("--threads", c.threads, "worker threads")->capture_default_str();
  cmd.add_option("--out", c.out_path, "write the report here instead of stdout");
}

ArchConfig arch(const Common& c) {
  ArchConfig cfg;
  cfg.width = c.width;
  cfg.max_rows_per_tile = c.tile_rows;
  cfg.mode = parse_si_mode(c.si);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + c.out_path);
  f << text;
}

std::pair<QuantMatrix, QuantMatrix> operands(const Operand& w_op, const Operand& x_op, const Common& c) {
  QuantMatrix w = w_op.given() ? load(w_op) : gen_random(64, 128, 8, c.seed);
  QuantMatrix x = x_op.given() ? load(x_op) : gen_random(w.cols(), 64, 8, derive_seed(c.seed, 1, 0, 0));
  if (w.cols() != x.rows()) {
    throw UsageError("W is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + " but X has " +
                     std::to_string(x.rows()) + " rows");
  }
  return {std::move(w), std::move(x)};
}

int cmd_verify(const Operand& w_op, const Operand& x_op, const Common& c, std::ostream& out) {
  const auto cfg = arch(c);
  const auto [w, x] = operands(w_op, x_op, c);
  const auto sim = simulate(w, x, cfg, c.threads);
  const auto ref = reference_gemm(w, x);
  std::int64_t max_diff = 0;
  for (std::size_t r = 0; r < ref.rows(); ++r)
    for (std::size_t m = 0; m < ref.cols(); ++m)
      max_diff = std::max(max_diff, std::abs(std::int64_t{sim.output.at(r, m)} - ref.at(r, m)));
  const bool exact = max_diff == 0;
  const auto& ops = sim.report.ops;

  std::ostringstream s;
  if (c.format == "json") {
    nlohmann::ordered_json j;
    j["exact"] = exact;
    j["max_abs_diff"] = max_diff;
    j["shape"] = {w.rows(), w.cols(), x.cols()};
    j["ops"] = {{"transitive", ops.transitive}, {"bitsparse", ops.bitsparse}, {"dense", ops.dense}};
    j["ppe_overflows_12bit"] = sim.report.diagnostics.ppe_overflows;
    s << j.dump(2) << "\n";
  } else {
    s << "shape: " << w.rows() << "x" << w.cols() << "x" << x.cols() << " S=" << w.bits() << " T=" << cfg.width
      << " si=" << c.si << "\n";
    s << "exact: " << (exact ? "true" : "false") << "\n";
    s << "max_abs_diff: " << max_diff << "\n";
    s << "transitive=" << ops.transitive << " bitsparse=" << ops.bitsparse << " dense=" << ops.dense << "\n";
    s << "ppe_overflows_12bit: " << sim.report.diagnostics.ppe_overflows << "\n";
  }
  emit(c, out, s.str());
  return exact ? kExitOk : kExitMismatch;
}

struct DseArgs {
  std::vector<unsigned> widths{4, 8};
  std::vector<std::size_t> rows{16, 32, 64, 128, 256, 512, 1024};
  std::size_t trials = 10;
  bool summary = false;
};

int cmd_dse(const DseArgs& a, const Common& c, std::ostream& out) {
  DseConfig cfg;
  cfg.widths = a.widths;
  cfg.rows = a.rows;
  cfg.trials = a.trials;
  cfg.seed = c.seed;
  cfg.mode = parse_si_mode(c.si);
  for (unsigned w : cfg.widths)
    if (!is_supported_width(w)) throw UsageError("unsupported --T " + std::to_string(w));
  if (cfg.trials == 0) throw UsageError("--trials must be positive");
  const auto rows = dse_sweep(cfg);
  std::ostringstream s;
  if (a.summary)
    write_dse_summary_csv(s, summarize(rows));
  else
    write_dse_csv(s, rows);
  emit(c, out, s.str());
  return kExitOk;
}

struct SimArgs {
  std::size_t tile_cols = ArchConfig{}.tile_cols;
  std::size_t units = ArchConfig{}.num_units;
  bool no_tiles = false;
};

int cmd_simulate(const Operand& w_op, const Operand& x_op, const SimArgs& a, const Common& c, std::ostream& out) {
  auto cfg = arch(c);
  cfg.tile_cols = a.tile_cols;
  cfg.num_units = a.units;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto [w, x] = operands(w_op, x_op, c);
  emit(c, out, simulate(w, x, cfg, c.threads).report.to_json(!a.no_tiles) + "\n");
  return kExitOk;
}

std::vector<TransRow> parse_rows(const std::vector<std::string>& items, unsigned& width, bool width_given) {
  std::vector<TransRow> out;
  for (const auto& s : items) {
    if (!width_given) {
      if (!is_supported_width(static_cast<unsigned>(s.size())))
        throw UsageError("cannot infer T from '" + s + "'; pass --T");
      width = static_cast<unsigned>(s.size());
      width_given = true;
    }
    if (s.size() != width) throw UsageError("TransRow '" + s + "' is not " + std::to_string(width) + " bits");
    try {
      out.push_back(parse_binary(s));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::string node_label(TransRow v, unsigned width) { return to_binary(v, width); }

std::string inspect_dot(const ScoreboardRun& run) {
  const unsigned width = run.table.width();
  std::ostringstream s;
  s << "digraph forest {\n";
  const auto order = hamming_order(width);
  bool any = false;
  for (TransRow v : order) {
    const auto& e = run.table[v];
    if (v == 0 || !(e.executed() || e.outlier())) continue;
    if (!any) {
      s << "  n0 [label=\"" << node_label(0, width) << "\", shape=box];\n";
      any = true;
    }
    s << "  n" << v << " [label=\"" << node_label(v, width) << "\\ncount=" << int(e.count)
      << " dist=" << int(e.distance) << " lane=" << run.forest.lane[v] << "\"";
    if (e.outlier()) s << ", style=dashed";
    if (e.materialized) s << ", style=dotted";
    s << "];\n";
  }
  for (TransRow v : order) {
    const TransRow p = run.forest.parent[v];
    if (v == 0 || p == kNoNode) continue;
    s << "  n" << p << " -> n" << v << ";\n";
  }
  s << "}\n";
  return s.str();
}

std::string inspect_json(const ScoreboardRun& run, const TransRowTile& tile) {
  using nlohmann::ordered_json;
  const unsigned width = run.table.width();
  ordered_json j;
  j["T"] = width;
  j["si_mode"] = std::string(to_string(run.si.mode()));
  auto rows = ordered_json::array();
  for (const auto& r : tile.rows)
    rows.push_back({{"value", to_binary(r.value, width)}, {"weight_row", r.weight_row}, {"bit_level", r.bit_level}});
  j["rows"] = std::move(rows);
  auto nodes = ordered_json::array();
  for (TransRow v : hamming_order(width)) {
    const auto& e = run.table[v];
    if (v == 0 || !(e.executed() || e.outlier())) continue;
    const TransRow p = run.forest.parent[v];
    nodes.push_back({{"node", to_binary(v, width)},
                     {"count", e.count},
                     {"distance", e.distance},
                     {"lane", run.forest.lane[v]},
                     {"parent", p == kNoNode ? ordered_json(nullptr) : ordered_json(to_binary(p, width))},
                     {"materialized", e.materialized},
                     {"outlier", e.outlier()}});
  }
  j["nodes"] = std::move(nodes);
  j["workload"] = run.forest.workload;
  j["trees"] = run.forest.tree_count();
  return j.dump(2) + "\n";
}

struct InspectArgs {
  std::vector<std::string> rows;
  std::size_t tile = 0;
};

int cmd_inspect(const InspectArgs& a, const Operand& w_op, bool width_given, Common c, std::ostream& out) {
  if (c.format.empty()) c.format = "dot";
  if (c.format != "dot" && c.format != "json") throw UsageError("inspect supports --format dot|json");
  TransRowTile tile;
  if (w_op.given()) {
    if (!a.rows.empty()) throw UsageError("--rows and --w are mutually exclusive");
    if (!is_supported_width(c.width)) throw UsageError("unsupported --T");
    const auto w = load(w_op);
    const auto tiles = slice(w, c.width, std::max<std::size_t>(1, c.tile_rows / static_cast<std::size_t>(w.bits())));
    if (a.tile >= tiles.size()) throw UsageError("--tile out of range (" + std::to_string(tiles.size()) + " tiles)");
    tile = tiles[a.tile];
  } else {
    unsigned width = c.width;
    const auto values = parse_rows(a.rows, width, width_given);
    if (!is_supported_width(width)) throw UsageError("unsupported --T");
    tile = make_tile(values, width);
  }
  const auto run = run_scoreboard(record(tile.rows, tile.width), parse_si_mode(c.si));
  emit(c, out, c.format == "dot" ? inspect_dot(run) : inspect_json(run, tile));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transitive-sparsity GEMM: verification, DSE, simulation and scoreboard inspection", "transitive"};
  app.require_subcommand(1);

  Common c;
  Operand w_op, x_op;

  auto* verify = app.add_subcommand("verify", "check transitive GEMM against the reference");
  add_common(*verify, c);
  add_operand(*verify, "w", w_op, "weight");
  add_operand(*verify, "x", x_op, "input");
  verify->add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  DseArgs dse_args;
  auto* dse = app.add_subcommand("dse", "density sweep over random tiles, CSV output");
  add_common(*dse, c, false);
  dse->add_option("--T", dse_args.widths, "TransRow widths")->delimiter(',')->capture_default_str();
  dse->add_option("--tile-rows", dse_args.rows, "TransRows per tile")->delimiter(',')->capture_default_str();
  dse->add_option("--trials", dse_args.trials, "trials per point")->capture_default_str();
  dse->add_flag("--summary", dse_args.summary, "emit per-point mean/std instead of per-trial rows");
  dse->add_option("--format", c.format, "csv")->check(CLI::IsMember({"csv"}));

  SimArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "tiled pipeline simulation, JSON report");
  add_common(*sim, c);
  add_operand(*sim, "w", w_op, "weight");
  add_operand(*sim, "x", x_op, "input");
  sim->add_option("--tile-cols", sim_args.tile_cols, "X columns per pipeline tile")->capture_default_str();
  sim->add_option("--units", sim_args.units, "parallel TransArray units")->capture_default_str();
  sim->add_flag("--no-tiles", sim_args.no_tiles, "omit the per-tile records");
  sim->add_option("--format", c.format, "json")->check(CLI::IsMember({"json"}));

  InspectArgs ins_args;
  auto* ins = app.add_subcommand("inspect", "scoreboard forest of one tile as DOT or JSON");
  add_common(*ins, c);
  add_operand(*ins, "w", w_op, "weight");
  ins->add_option("--rows", ins_args.rows, "TransRows as binary strings, MSB first")->delimiter(',');
  ins->add_option("--tile", ins_args.tile, "tile index when slicing --w")->capture_default_str();
  ins->add_option("--format", c.format, "dot or json")->check(CLI::IsMember({"dot", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    // Help for the selected subcommand if there is one.
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(w_op, x_op, c, out);
    if (dse->parsed()) return cmd_dse(dse_args, c, out);
    if (sim->parsed()) return cmd_simulate(w_op, x_op, sim_args, c, out);
    return cmd_inspect(ins_args, w_op, ins->count("--T") > 0, c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const QTensorError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  }
}

}  // namespace transitive::cli
