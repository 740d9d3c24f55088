#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nordstrom/nordstrom.hpp"
#include "nordstrom_verify/criteria.hpp"

namespace ns = nordstrom;

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ns::ConfigError("--values", "not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw ns::ConfigError("--values", "not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

int cmd_run(const std::string& path) {
  const auto start = std::chrono::steady_clock::now();
  const ns::ExperimentConfig cfg = ns::load_config(path);
  const ns::RunResult r = ns::run_and_write(cfg);
  for (const auto& c : r.report["checks"]) {
    std::cout << c["name"].get<std::string>() << ": " << c["status"].get<std::string>() << "\n";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wrote " << cfg.output_dir << " in " << secs << " s, exit " << r.exit_code << "\n";
  return r.exit_code;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& values,
              int parallel) {
  std::ifstream in(path);
  if (!in) throw ns::ConfigError("$", "cannot read " + path);
  ns::json base;
  try {
    in >> base;
  } catch (const ns::json::parse_error& e) {
    throw ns::ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  const std::string out_dir =
      base.contains("output_dir") && base["output_dir"].is_string() ? base["output_dir"].get<std::string>()
                                                                     : "out";
  const auto rows = ns::sweep(base, param, parse_values(values), parallel, out_dir);
  const std::string csv = ns::sweep_csv(param, rows);
  ns::write_atomic(std::filesystem::path(out_dir) / "sweep.csv", csv);
  std::cout << csv;
  return ns::exit_code::pass;
}

int cmd_certify(double a0, double f0, double g0, double kappa) {
  try {
    std::cout << ns::to_json(ns::certificate(a0, f0, g0, kappa)).dump(2) << "\n";
  } catch (const ns::UnsupportedParameterError& e) {
    throw ns::ConfigError("--kappa", e.what());
  }
  return ns::exit_code::pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped semilinear wave solver and diagnostics"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Solve one configuration and write its outputs");
  run->add_option("config", config, "experiment JSON")->required();

  std::string param, values;
  int parallel = 1;
  auto* sw = app.add_subcommand("sweep", "Repeat a run over values of one numeric field");
  sw->add_option("config", config, "base experiment JSON")->required();
  sw->add_option("--param", param, "dotted path of a numeric field, e.g. grid.kappa")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--parallel", parallel, "worker threads (capped by NORDSTROM_THREADS)")
      ->check(CLI::PositiveNumber);

  double a0 = 0, f0 = 0, g0 = 0, kappa = 0;
  auto* cert = app.add_subcommand("certify", "Print the blow-up certificate as JSON");
  cert->add_option("--a0", a0)->required();
  cert->add_option("--f0", f0)->required();
  cert->add_option("--g0", g0)->required();
  cert->add_option("--kappa", kappa)->required();

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ns::exit_code::config_error;
  }

  try {
    if (*run) return cmd_run(config);
    if (*sw) return cmd_sweep(config, param, values, parallel);
    if (*cert) return cmd_certify(a0, f0, g0, kappa);
    if (*verify) {
      return acceptance::run_all(std::cout) == 0 ? ns::exit_code::pass : ns::exit_code::check_failed;
    }
  } catch (const ns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ns::exit_code::config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ns::exit_code::not_converged;
  }
  return ns::exit_code::config_error;
}
