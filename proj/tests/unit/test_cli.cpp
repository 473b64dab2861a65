#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "transitive/perfmodel.hpp"

using namespace transitive;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = TRANSITIVE_DATA_DIR;

std::string temp_path(const std::string& name) { return "cli_test_" + name; }

}  // namespace

TEST_CASE("verify: generated operands are exact") {
  const auto r = run({"verify", "--w-gen", "64,128,8,1", "--x-gen", "128,64,8,2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("exact: true") != std::string::npos);
  CHECK(r.out.find("max_abs_diff: 0") != std::string::npos);
}

TEST_CASE("verify: both SI modes, small widths, threads") {
  for (const char* si : {"static", "dynamic"}) {
    const auto r = run({"verify", "--w-gen", "40,30,4,3", "--x-gen", "30,9,8,4", "--T", "4", "--si", si,
                        "--tile-rows", "32", "--threads", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("exact: true") != std::string::npos);
  }
}

TEST_CASE("verify: zero matrices are trivially exact") {
  const auto w = QuantMatrix::zeros(8, 16, 8);
  const auto x = QuantMatrix::zeros(16, 4, 8);
  save_qtensor(w, temp_path("zw.qt"));
  save_qtensor(x, temp_path("zx.qt"));
  const auto r = run({"verify", "--w", temp_path("zw.qt"), "--x", temp_path("zx.qt")});
  CHECK(r.code == 0);
  CHECK(r.out.find("exact: true") != std::string::npos);
  CHECK(r.out.find("transitive=0 ") != std::string::npos);
  std::remove(temp_path("zw.qt").c_str());
  std::remove(temp_path("zx.qt").c_str());
}

TEST_CASE("verify: four-row example op counts from CSV") {
  const auto r = run({"verify", "--w", kData + "/four_row_w.csv", "--w-bits", "2", "--x", kData + "/four_row_x.csv",
                      "--T", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("transitive=4 bitsparse=10 dense=16") != std::string::npos);
}

TEST_CASE("verify: json format") {
  const auto r = run({"verify", "--w-gen", "8,8,8,1", "--x-gen", "8,2,8,2", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["exact"] == true);
  CHECK(j["max_abs_diff"] == 0);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"verify", "--w", "a.qt", "--w-gen", "1,1,8,1"}).code == 2);
  CHECK(run({"verify", "--w-gen", "1,1,8"}).code == 2);
  CHECK(run({"verify", "--w-gen", "4,4,8,1", "--x-gen", "5,4,8,1"}).code == 2);
  CHECK(run({"verify", "--T", "5"}).code == 2);
  CHECK(run({"verify", "--si", "both"}).code == 2);
  CHECK(run({"verify", "--w", "does_not_exist.qt"}).code == 2);
  CHECK(run({"inspect", "--rows", "101,1111"}).code == 2);
  CHECK(run({"inspect", "--rows", "1021"}).code == 2);
  CHECK(run({"dse", "--T", "5"}).code == 2);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"verify", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--w-gen") != std::string::npos);
}

TEST_CASE("dse: schema and determinism") {
  const std::vector<std::string> args{"dse", "--T", "4,8", "--tile-rows", "16,64", "--trials", "3", "--seed", "9"};
  const auto a = run(args), b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  std::istringstream lines(a.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == kDseCsvHeader);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) ++n;
  CHECK(n == 2 * 2 * 3);

  const auto other = run({"dse", "--T", "4,8", "--tile-rows", "16,64", "--trials", "3", "--seed", "10"});
  CHECK(other.out != a.out);
}

TEST_CASE("dse: writes --out and summary mode") {
  const auto path = temp_path("dse.csv");
  const auto r = run({"dse", "--T", "8", "--tile-rows", "256", "--trials", "20", "--summary", "--out", path});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream f(path);
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  CHECK(header.rfind("T,rows,trials,density_mean", 0) == 0);
  // T=8, rows=256: mean density within the acceptance band.
  std::istringstream cells(row);
  std::string t, rows, trials, density;
  std::getline(cells, t, ',');
  std::getline(cells, rows, ',');
  std::getline(cells, trials, ',');
  std::getline(cells, density, ',');
  CHECK(std::stod(density) >= 0.125);
  CHECK(std::stod(density) <= 0.22);
  std::remove(path.c_str());
}

TEST_CASE("simulate: JSON report, static vs dynamic") {
  const std::vector<std::string> base{"simulate", "--w-gen", "256,64,8,1", "--x-gen", "64,16,8,2", "--tile-rows", "64"};
  auto dyn_args = base, st_args = base;
  st_args.insert(st_args.end(), {"--si", "static"});
  const auto dyn = run(dyn_args), st = run(st_args);
  REQUIRE(dyn.code == 0);
  REQUIRE(st.code == 0);
  const auto jd = nlohmann::json::parse(dyn.out), js = nlohmann::json::parse(st.out);
  CHECK(jd["density"].get<double>() < js["density"].get<double>());
  CHECK(js["stage_cycles"]["scoreboard"] == 0);
  CHECK(jd["stage_cycles"]["scoreboard"].get<std::uint64_t>() > 0);
  CHECK(jd["ops"]["bitsparse"] == js["ops"]["bitsparse"]);
  CHECK(jd["config"]["si_mode"] == "dynamic");
  CHECK(jd["tiles"].size() == jd["tile_count"]);
}

TEST_CASE("simulate: one tile is fill only, output independent of threads") {
  const auto one = run({"simulate", "--w-gen", "8,8,8,1", "--x-gen", "8,16,8,2", "--threads", "1"});
  REQUIRE(one.code == 0);
  const auto j = nlohmann::json::parse(one.out);
  REQUIRE(j["tile_count"] == 1);
  const auto& t = j["tiles"][0];
  CHECK(j["total_cycles"] == t["scoreboard_cycles"].get<std::uint64_t>() + t["ppe_cycles"].get<std::uint64_t>() +
                                 t["ape_cycles"].get<std::uint64_t>());

  const auto a = run({"simulate", "--w-gen", "300,40,8,5", "--x-gen", "40,70,8,6", "--threads", "1", "--no-tiles"});
  const auto b = run({"simulate", "--w-gen", "300,40,8,5", "--x-gen", "40,70,8,6", "--threads", "4", "--no-tiles"});
  CHECK(a.out == b.out);
  CHECK(nlohmann::json::parse(a.out).contains("tiles") == false);
}

TEST_CASE("inspect: chain in one lane") {
  const auto r = run({"inspect", "--rows", "0010,0011,1011,1111", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["T"] == 4);
  REQUIRE(j["nodes"].size() == 4);
  const char* chain[][2] = {{"0010", "0000"}, {"0011", "0010"}, {"1011", "0011"}, {"1111", "1011"}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(j["nodes"][i]["node"] == chain[i][0]);
    CHECK(j["nodes"][i]["parent"] == chain[i][1]);
    CHECK(j["nodes"][i]["lane"] == j["nodes"][0]["lane"]);
    CHECK(j["nodes"][i]["distance"] == 1);
  }
  CHECK(j["rows"].size() == 4);
  CHECK(j["rows"][2]["value"] == "1011");

  const auto dot = run({"inspect", "--rows", "0010,0011,1011,1111"});
  REQUIRE(dot.code == 0);
  CHECK(dot.out.rfind("digraph forest {", 0) == 0);
  for (const char* edge : {"n0 -> n2;", "n2 -> n3;", "n3 -> n11;", "n11 -> n15;"})
    CHECK(dot.out.find(edge) != std::string::npos);
  CHECK(run({"inspect", "--rows", "0010,0011,1011,1111"}).out == dot.out);
}

TEST_CASE("inspect: duplicates show in count, empty input is an empty graph") {
  const auto r = run({"inspect", "--rows", "0110,0110,0110", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  bool found = false;
  for (const auto& n : j["nodes"])
    if (n["node"] == "0110") found = n["count"] == 3;
  CHECK(found);

  const auto empty = run({"inspect", "--T", "8"});
  CHECK(empty.code == 0);
  CHECK(empty.out == "digraph forest {\n}\n");
  const auto ej = nlohmann::json::parse(run({"inspect", "--T", "8", "--format", "json"}).out);
  CHECK(ej["nodes"].empty());
}

TEST_CASE("inspect: tiles of a weight matrix") {
  const auto r = run({"inspect", "--w", kData + "/four_row_w.csv", "--w-bits", "2", "--T", "4", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["rows"].size() == 4);
  const char* expect[] = {"1011", "1111", "0011", "0010"};
  for (std::size_t i = 0; i < 4; ++i) CHECK(j["rows"][i]["value"] == expect[i]);
  CHECK(run({"inspect", "--w-gen", "4,4,8,1", "--T", "4", "--tile", "9"}).code == 2);
}
