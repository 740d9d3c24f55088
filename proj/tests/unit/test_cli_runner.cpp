#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "catch_amalgamated.hpp"

#include "nordstrom/experiment.hpp"

using namespace nordstrom;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag)
      : dir(fs::temp_directory_path() / ("nordstrom_cli_" + std::to_string(::getpid()) + "_" + tag)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string env_or_skip(const char* name) {
  const char* v = std::getenv(name);
  if (!v) SKIP(std::string(name) + " not set");
  return v;
}

struct Cli {
  int code;
  std::string out;
};

Cli cli(const std::string& args, const fs::path& scratch) {
  const std::string bin = env_or_skip("NORDSTROM_CLI");
  const fs::path out = scratch / "stdout.txt";
  const std::string cmd = "'" + bin + "' " + args + " > '" + out.string() + "' 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out)};
}

json config(const std::string& name) {
  const std::string dir = env_or_skip("NORDSTROM_CONFIGS");
  return json::parse(slurp(fs::path(dir) / name));
}

fs::path write_config(const json& j, const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string config_error_path(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

const json minimal = json::parse(R"({
  "grid": {"n_per_dim": 4, "kappa": 0.5}, "m": 1,
  "initial_data": {"f": {"constant": 0.0}, "g": {"constant": 0.0}},
  "source": {"constant": 0.0}, "t_end": 1.0, "dt": 0.1, "solver": "linear-only",
  "checks": ["energy"]})");

}  // namespace

TEST_CASE("config errors name the offending field", "[config]") {
  CHECK(config_error_path(minimal).empty());

  json j = minimal;
  j["grid"]["kappa"] = 1.5;
  CHECK(config_error_path(j) == "grid.kappa");
  j = minimal;
  j["grid"]["n_per_dim"] = 7;
  CHECK(config_error_path(j) == "grid.n_per_dim");
  j = minimal;
  j.erase("t_end");
  CHECK(config_error_path(j) == "t_end");
  j = minimal;
  j["solver"] = "leapfrog";
  CHECK(config_error_path(j) == "solver");
  j = minimal;
  j["checks"] = {"energy", "energy"};
  CHECK(config_error_path(j).rfind("checks", 0) == 0);
  j = minimal;
  j["checks"] = {"entropy"};
  CHECK(config_error_path(j).rfind("checks", 0) == 0);
  j = minimal;
  j["source"] = {{"constant", 1.0}};
  CHECK(config_error_path(j) == "source");
  j = minimal;
  j["checks"] = {"blowup"};
  CHECK(config_error_path(j).rfind("checks", 0) == 0);
  j = minimal;
  j["initial_data"]["f"] = json::array({{{"k", {9, 0, 0}}, {"c", 0.1}}});
  CHECK(config_error_path(j).rfind("initial_data.f", 0) == 0);
}

TEST_CASE("numbers are written with 17 significant digits", "[output]") {
  CHECK(fmt17(0.1) == "0.10000000000000001");
  CHECK(std::stod(fmt17(M_PI)) == M_PI);
}

TEST_CASE("sweep field substitution", "[sweep]") {
  json j = minimal;
  set_numeric(j, "grid.kappa", 0.25);
  CHECK(j["grid"]["kappa"] == 0.25);
  CHECK_THROWS_AS(set_numeric(j, "grid.nope", 1.0), ConfigError);
  CHECK_THROWS_AS(set_numeric(j, "solver", 1.0), ConfigError);
  CHECK_THROWS_AS(set_numeric(j, "grid.n_per_dim", 4.5), ConfigError);
}

TEST_CASE("thread cap", "[sweep]") {
  ::setenv("NORDSTROM_THREADS", "2", 1);
  CHECK(thread_cap(8) == 2);
  CHECK(thread_cap(1) == 1);
  ::setenv("NORDSTROM_THREADS", "junk", 1);
  CHECK(thread_cap(8) == 8);
  ::unsetenv("NORDSTROM_THREADS");
  CHECK(thread_cap(3) == 3);
}

TEST_CASE("run: linear-only zero example", "[cli]") {
  Scratch s("zero");
  json j = config("linear_zero.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("run '" + write_config(j, s.dir, "c.json").string() + "'", s.dir);
  CHECK(r.code == 0);
  const auto rows = csv_rows(slurp(s.dir / "out" / "trajectory.csv"));
  REQUIRE(rows.size() == 22);
  CHECK(rows[0][0] == "t");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t c = 1; c < rows[i].size(); ++c) {
      // min(1+u) is 1 for the zero solution; every other column is 0.
      if (rows[0][c] == "min_one_plus_u") {
        CHECK(std::stod(rows[i][c]) == 1.0);
      } else {
        CHECK(std::stod(rows[i][c]) == 0.0);
      }
    }
  }
  const json report = json::parse(slurp(s.dir / "out" / "report.json"));
  for (const auto& c : report["checks"]) CHECK(c["status"] != "fail");
  CHECK(fs::exists(s.dir / "out" / "norms.svg"));
}

TEST_CASE("exit codes", "[cli]") {
  Scratch s("codes");
  json bad = minimal;
  bad["grid"]["kappa"] = 1.5;
  CHECK(cli("run '" + write_config(bad, s.dir, "bad.json").string() + "'", s.dir).code == 2);
  CHECK(cli("run '" + (s.dir / "missing.json").string() + "'", s.dir).code == 2);
  CHECK(cli("frobnicate", s.dir).code == 2);

  json fail = json::parse(R"({
    "grid": {"n_per_dim": 4, "kappa": 0.5}, "m": 1,
    "initial_data": {"f": [{"k": [1, 0, 0], "c": 0.1}], "g": {"constant": 0.0}},
    "source": {"constant": 0.0}, "t_end": 20.0, "dt": 0.5, "solver": "linear-only",
    "checks": ["decay"], "decay_tolerance": 1e-12})");
  fail["output_dir"] = (s.dir / "fail").string();
  CHECK(cli("run '" + write_config(fail, s.dir, "fail.json").string() + "'", s.dir).code == 1);

  json diverge = json::parse(R"({
    "grid": {"n_per_dim": 4, "kappa": 0.5}, "m": 1,
    "initial_data": {"f": {"constant": 0.0}, "g": {"constant": 1.0}},
    "source": {"constant": 8.0}, "t_end": 3.0, "dt": 0.1, "solver": "picard",
    "picard": {"R": 2.0, "max_iter": 20, "samples": 40}, "checks": []})");
  diverge["output_dir"] = (s.dir / "diverge").string();
  CHECK(cli("run '" + write_config(diverge, s.dir, "diverge.json").string() + "'", s.dir).code == 3);
}

TEST_CASE("certify", "[cli]") {
  Scratch s("certify");
  const auto yes = cli("certify --a0 8 --f0 0 --g0 1 --kappa 0.5", s.dir);
  REQUIRE(yes.code == 0);
  const json a = json::parse(yes.out);
  CHECK(a["certifies_blowup"] == true);
  CHECK(std::abs(a["tau0"].get<double>() - 1.8935) < 5e-4);
  CHECK(std::abs(a["t0"].get<double>() - 2.2393) < 5e-4);

  const json b = json::parse(cli("certify --a0 1 --f0 0 --g0 1 --kappa 0.5", s.dir).out);
  CHECK(b["certifies_blowup"] == false);
  CHECK(b["reasons"][0].get<std::string>().find("lambda^4") != std::string::npos);

  const json c = json::parse(cli("certify --a0 8 --f0 0 --g0 0 --kappa 0.5", s.dir).out);
  CHECK(c["certifies_blowup"] == false);
  CHECK(c["reasons"][0].get<std::string>().find("g0 > 0") != std::string::npos);

  CHECK(cli("certify --a0 8 --f0 0 --g0 1 --kappa 1.5", s.dir).code == 2);
}

TEST_CASE("sweep with no values writes only the header", "[cli]") {
  Scratch s("empty");
  json j = config("sweep_kappa.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("sweep '" + write_config(j, s.dir, "c.json").string() +
                         "' --param grid.kappa --values ''", s.dir);
  CHECK(r.code == 0);
  const auto rows = csv_rows(slurp(s.dir / "out" / "sweep.csv"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][1] == "grid.kappa");
}

TEST_CASE("sweep over a0 moves from bounded to blow-up", "[cli]") {
  Scratch s("a0");
  json j = config("sweep_a0.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("sweep '" + write_config(j, s.dir, "c.json").string() +
                         "' --param source.constant --values 0.1,1,8,64 --parallel 4", s.dir);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(s.dir / "out" / "sweep.csv"));
  REQUIRE(rows.size() == 5);
  std::size_t col = 0;
  while (col < rows[0].size() && rows[0][col] != "blowup_time") ++col;
  REQUIRE(col < rows[0].size());
  std::vector<bool> blew;
  for (std::size_t i = 1; i < rows.size(); ++i) blew.push_back(std::isfinite(std::stod(rows[i][col])));
  CHECK_FALSE(blew.front());
  CHECK(blew.back());
  for (std::size_t i = 1; i < blew.size(); ++i) CHECK((blew[i] || !blew[i - 1]));
}

TEST_CASE("sweep over kappa: decay exponent follows kappa", "[cli]") {
  Scratch s("kappa");
  json j = config("sweep_kappa.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("sweep '" + write_config(j, s.dir, "c.json").string() +
                         "' --param grid.kappa --values 0.1,0.5,0.9 --parallel 2", s.dir);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(s.dir / "out" / "sweep.csv"));
  REQUIRE(rows.size() == 4);
  std::size_t col = 0;
  while (col < rows[0].size() && rows[0][col] != "decay_exponent") ++col;
  REQUIRE(col < rows[0].size());
  const double kappas[] = {0.1, 0.5, 0.9};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(std::stod(rows[i + 1][col]) - kappas[i]) < 0.05 * kappas[i] + 0.01);
  }
}

TEST_CASE("picard run reports contraction factors", "[cli]") {
  Scratch s("picard");
  json j = config("picard_small.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("run '" + write_config(j, s.dir, "c.json").string() + "'", s.dir);
  CHECK(r.code == 0);
  const json report = json::parse(slurp(s.dir / "out" / "report.json"));
  const auto& p = report["solver"]["picard"];
  CHECK(p["status"] == "converged");
  REQUIRE(p["contraction_factors"].size() >= 1);
  for (const auto& q : p["contraction_factors"]) CHECK(q.get<double>() < 1.0);
  bool decay_passed = false;
  for (const auto& c : report["checks"]) {
    if (c["name"] == "decay") decay_passed = c["status"] == "pass";
  }
  CHECK(decay_passed);
}

TEST_CASE("certified blow-up run", "[cli]") {
  Scratch s("blowup");
  json j = config("blowup_certified.json");
  j["output_dir"] = (s.dir / "out").string();
  const auto r = cli("run '" + write_config(j, s.dir, "c.json").string() + "'", s.dir);
  CHECK(r.code == 0);
  const json report = json::parse(slurp(s.dir / "out" / "report.json"));
  for (const auto& c : report["checks"]) {
    if (c["name"] == "blowup") CHECK(c["status"] == "pass");
  }
  CHECK(report["certificate"]["certifies_blowup"] == true);
}
