#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "nordstrom/blowup.hpp"
#include "nordstrom/energy_monitor.hpp"
#include "nordstrom/errors.hpp"
#include "nordstrom/evolver.hpp"
#include "nordstrom/linear_solver.hpp"
#include "nordstrom/positivity.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"

namespace nordstrom {

using json = nlohmann::json;

enum class Solver { picard, timestep, linear_only };

inline std::string to_string(Solver s) {
  switch (s) {
    case Solver::picard: return "picard";
    case Solver::timestep: return "timestep";
    default: return "linear-only";
  }
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"energy", "gronwall", "decay",
                                              "blowup", "positivity", "jensen"};
  return names;
}

struct PicardSettings {
  double R = 1.0;
  double tol = 1e-10;
  int max_iter = 50;
  int samples = 200;
};

struct ExperimentConfig {
  GridSpec grid;
  double m = 3.0;
  SpectralField f, g;
  SourceSpec source;
  double t_end = 1.0;
  double dt = 0.01;
  Solver solver = Solver::timestep;
  std::vector<std::string> checks;
  std::string output_dir = "out";
  bool plot = true;
  PicardSettings picard;
  int sample_every = 1;
  double decay_tolerance = 1e-3;
  json echo;

  WaveState initial() const { return {0.0, f, g}; }
  bool wants(const std::string& c) const {
    return std::find(checks.begin(), checks.end(), c) != checks.end();
  }
  int output_samples() const { return std::max(3, int(std::lround(t_end / dt)) + 1); }
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path == "$" ? key : path + "." + key;
}

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "not finite");
  return v;
}

inline double number_or(const json& j, const std::string& key, double fallback,
                        const std::string& path) {
  return j.contains(key) ? number(j.at(key), join(path, key)) : fallback;
}

inline int integer_or(const json& j, const std::string& key, int fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<int>();
}

/// [{"k": [k1,k2,k3], "c": re | [re, im]}, ...]
inline std::vector<Mode> parse_modes(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of modes");
  std::vector<Mode> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& k = field(j[i], "k", p);
    if (!k.is_array() || k.size() != 3 || !std::all_of(k.begin(), k.end(), [](const json& x) {
          return x.is_number_integer();
        })) {
      throw ConfigError(p + ".k", "expected three integers");
    }
    const json& c = field(j[i], "c", p);
    complex value;
    if (c.is_number()) {
      value = number(c, p + ".c");
    } else if (c.is_array() && c.size() == 2) {
      value = complex(number(c[0], p + ".c[0]"), number(c[1], p + ".c[1]"));
    } else {
      throw ConfigError(p + ".c", "expected a number or [re, im]");
    }
    out.push_back({{k[0].get<int>(), k[1].get<int>(), k[2].get<int>()}, value});
  }
  return out;
}

inline SpectralField parse_field(const json& j, const GridSpec& grid, const std::string& path) {
  if (j.is_object() && j.contains("constant")) {
    return SpectralField::constant(grid, number(j.at("constant"), path + ".constant"));
  }
  const std::vector<Mode> modes = parse_modes(j.is_object() ? field(j, "modes", path) : j,
                                              j.is_object() ? path + ".modes" : path);
  for (const Mode& md : modes) {
    if (!grid.contains(md.k)) throw ConfigError(path, "mode outside the grid band");
  }
  try {
    return SpectralField::from_modes(grid, modes, 1e-12);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

inline SourceSpec parse_source(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (j.contains("constant")) return SourceSpec::constant(number(j.at("constant"), path + ".constant"));
  Envelope env;
  if (j.contains("envelope")) {
    const json& e = j.at("envelope");
    const std::string ep = path + ".envelope";
    const json& kind = field(e, "kind", ep);
    if (!kind.is_string()) throw ConfigError(ep + ".kind", "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "constant") {
      env = Envelope::constant();
    } else if (k == "exponential") {
      env = Envelope::exponential(number(field(e, "rate", ep), ep + ".rate"));
    } else if (k == "polynomial") {
      const json& c = field(e, "coefficients", ep);
      if (!c.is_array() || c.empty()) throw ConfigError(ep + ".coefficients", "expected a non-empty list");
      std::vector<double> coef;
      for (std::size_t i = 0; i < c.size(); ++i) {
        coef.push_back(number(c[i], ep + ".coefficients[" + std::to_string(i) + "]"));
      }
      env = Envelope::polynomial(coef);
    } else {
      throw ConfigError(ep + ".kind", "unknown envelope '" + k + "'");
    }
  }
  try {
    return SourceSpec(env, parse_modes(field(j, "modes", path), path + ".modes"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ".modes", e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("$", "expected a JSON object");
  ExperimentConfig c;
  c.echo = j;

  const json& gj = field(j, "grid", "$");
  c.m = number_or(j, "m", 3.0, "$");
  try {
    c.grid = GridSpec(integer_or(gj, "n_per_dim", 16, "grid"), c.m,
                      number(field(gj, "kappa", "grid"), "grid.kappa"));
  } catch (const ConfigError&) {
    throw;
  } catch (const DimensionError& e) {
    throw ConfigError("grid.n_per_dim", e.what());
  } catch (const UnsupportedParameterError& e) {
    throw ConfigError("grid.kappa", e.what());
  } catch (const DomainError& e) {
    throw ConfigError("m", e.what());
  }

  const json& init = field(j, "initial_data", "$");
  c.f = parse_field(field(init, "f", "initial_data"), c.grid, "initial_data.f");
  c.g = parse_field(field(init, "g", "initial_data"), c.grid, "initial_data.g");
  c.source = j.contains("source") ? parse_source(j.at("source"), "source") : SourceSpec::constant(0.0);
  if (2 * c.source.bandwidth() >= c.grid.n_per_dim) {
    throw ConfigError("source.modes", "source bandwidth exceeds the grid");
  }

  c.t_end = number(field(j, "t_end", "$"), "t_end");
  c.dt = number(field(j, "dt", "$"), "dt");
  if (!(c.t_end > 0.0)) throw ConfigError("t_end", "must be positive");
  if (!(c.dt > 0.0 && c.dt <= c.t_end)) throw ConfigError("dt", "must lie in (0, t_end]");

  const json& sj = field(j, "solver", "$");
  if (!sj.is_string()) throw ConfigError("solver", "expected a string");
  const std::string s = sj.get<std::string>();
  if (s == "picard") c.solver = Solver::picard;
  else if (s == "timestep") c.solver = Solver::timestep;
  else if (s == "linear-only") c.solver = Solver::linear_only;
  else throw ConfigError("solver", "unknown solver '" + s + "'");

  if (j.contains("checks")) {
    const json& cj = j.at("checks");
    if (!cj.is_array()) throw ConfigError("checks", "expected a list");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string p = "checks[" + std::to_string(i) + "]";
      if (!cj[i].is_string()) throw ConfigError(p, "expected a string");
      const std::string name = cj[i].get<std::string>();
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw ConfigError(p, "unknown check '" + name + "'");
      }
      if (c.wants(name)) throw ConfigError(p, "duplicate check '" + name + "'");
      c.checks.push_back(name);
    }
  }
  if (c.solver == Solver::linear_only && !c.source.is_zero()) {
    throw ConfigError("source", "linear-only solver needs a zero source");
  }
  if (c.wants("blowup") && c.solver != Solver::timestep) {
    throw ConfigError("checks", "blowup check needs the timestep solver");
  }

  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("plot")) {
    if (!j.at("plot").is_boolean()) throw ConfigError("plot", "expected true or false");
    c.plot = j.at("plot").get<bool>();
  }
  if (j.contains("picard")) {
    const json& pj = j.at("picard");
    c.picard.R = number_or(pj, "R", c.picard.R, "picard");
    c.picard.tol = number_or(pj, "tol", c.picard.tol, "picard");
    c.picard.max_iter = integer_or(pj, "max_iter", c.picard.max_iter, "picard");
    c.picard.samples = integer_or(pj, "samples", c.picard.samples, "picard");
    if (!(c.picard.tol > 0.0)) throw ConfigError("picard.tol", "must be positive");
    if (c.picard.max_iter < 1) throw ConfigError("picard.max_iter", "must be at least 1");
    if (c.picard.samples < 3) throw ConfigError("picard.samples", "must be at least 3");
  }
  if (c.solver == Solver::picard &&
      !(c.picard.R > sobolev_norm(c.f, c.m + 1.0))) {
    throw ConfigError("picard.R", "must exceed the H^{m+1} norm of f");
  }
  if (j.contains("timestep")) {
    c.sample_every = integer_or(j.at("timestep"), "sample_every", 1, "timestep");
    if (c.sample_every < 1) throw ConfigError("timestep.sample_every", "must be at least 1");
  }
  c.decay_tolerance = number_or(j, "decay_tolerance", c.decay_tolerance, "$");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline json to_json(const BlowupCertificate& c) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j{{"a0", c.a0},
         {"f0_hat", c.f0_hat},
         {"g0_hat", c.g0_hat},
         {"kappa", c.kappa},
         {"lambda4", num(c.lambda4)},
         {"lambda", num(c.lambda)},
         {"beta", num(c.beta)},
         {"tau0", num(c.tau0)},
         {"t0", c.t0 ? json(*c.t0) : json(nullptr)},
         {"hypotheses",
          {{"a0_positive", c.a0_positive},
           {"one_plus_f0_positive", c.one_plus_f0_positive},
           {"g0_positive", c.g0_positive},
           {"lambda4_nonnegative", c.lambda4_nonnegative}}},
         {"hypotheses_ok", c.hypotheses_ok()},
         {"certifies_blowup", c.certifies_blowup},
         {"inconclusive", c.inconclusive},
         {"reasons", c.reasons}};
  return j;
}

struct TrajectoryRow {
  double t, sobolev_norm_m1, homogeneous_norm, mean_u, energy, gronwall_bound, min_one_plus_u;
};

inline std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream out;
  out << "t,sobolev_norm_m1,homogeneous_norm,mean_u,energy,gronwall_bound,min_one_plus_u\n";
  for (const auto& r : rows) {
    out << fmt17(r.t) << ',' << fmt17(r.sobolev_norm_m1) << ',' << fmt17(r.homogeneous_norm) << ','
        << fmt17(r.mean_u) << ',' << fmt17(r.energy) << ',' << fmt17(r.gronwall_bound) << ','
        << fmt17(r.min_one_plus_u) << '\n';
  }
  return out.str();
}

/// Log-scale plot of the H^{m+1} norms with optional vertical markers.
inline std::string norms_svg(const std::vector<TrajectoryRow>& rows,
                             const std::vector<std::pair<std::string, double>>& markers) {
  const double W = 640, H = 400, L = 70, R = 20, T = 30, B = 50;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double t0 = rows.empty() ? 0.0 : rows.front().t, t1 = rows.empty() ? 1.0 : rows.back().t;
  for (const auto& mk : markers) t1 = std::max(t1, mk.second);
  if (!(t1 > t0)) t1 = t0 + 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    for (double v : {r.sobolev_norm_m1, r.homogeneous_norm}) {
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
    }
  }
  if (!std::isfinite(lo)) lo = -1.0, hi = 0.0;
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1.0);
  auto X = [&](double t) { return L + (W - L - R) * (t - t0) / (t1 - t0); };
  auto Y = [&](double v) { return H - B - (H - T - B) * (std::log10(v) - lo) / (hi - lo); };
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = int(lo); e <= int(hi); ++e) {
    const double y = Y(std::pow(10.0, e));
    s << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  s << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\">" << fmt17(t0) << "</text>\n"
    << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"end\">" << t1 << "</text>\n"
    << "<text x=\"" << (W + L - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t</text>\n";
  auto polyline = [&](auto get, const char* colour, const char* label, double ly) {
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (const auto& r : rows) {
      const double v = get(r);
      if (v > 0.0 && std::isfinite(v)) s << X(r.t) << ',' << Y(v) << ' ';
    }
    s << "\"/>\n<text x=\"" << L + 10 << "\" y=\"" << ly << "\" fill=\"" << colour << "\">" << label
      << "</text>\n";
  };
  polyline([](const TrajectoryRow& r) { return r.sobolev_norm_m1; }, "#1f77b4", "|u|_{H^{m+1}}", T + 16);
  polyline([](const TrajectoryRow& r) { return r.homogeneous_norm; }, "#d62728", "|u_h|_{H^{m+1}}", T + 32);
  for (const auto& [label, t] : markers) {
    s << "<line x1=\"" << X(t) << "\" x2=\"" << X(t) << "\" y1=\"" << T << "\" y2=\"" << H - B
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n<text x=\"" << X(t) + 3 << "\" y=\"" << T + 48
      << "\" fill=\"gray\">" << label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Runs

namespace exit_code {
inline constexpr int pass = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int not_converged = 3;
}  // namespace exit_code

struct CheckResult {
  std::string name;
  std::string status;  // pass | fail | not-applicable
  json detail = json::object();
};

struct RunResult {
  int exit_code = exit_code::pass;
  json report;
  std::vector<TrajectoryRow> rows;
  Trajectory trajectory;
  std::optional<BlowupCertificate> certificate;
  std::optional<double> blowup_time;
  bool diverged = false;
};

namespace detail {

inline CheckResult verdict(const std::string& name, bool ok, json detail = json::object()) {
  return {name, ok ? "pass" : "fail", std::move(detail)};
}

inline CheckResult not_applicable(const std::string& name, const std::string& why) {
  return {name, "not-applicable", {{"reason", why}}};
}

/// e^{-kappa t} a (1+u)^3 along the trajectory, or zero.
inline ForcingNormSamples forcing_norms(const Trajectory& tr, const SourceSpec& a, double m) {
  ForcingNormSamples out;
  const double kappa = tr.grid().kappa;
  for (const auto& s : tr.states) {
    out.times.push_back(s.time);
    if (a.is_zero()) {
      out.homogeneous.push_back(0.0);
      out.mean_abs.push_back(0.0);
      continue;
    }
    const SpectralField F = std::exp(-kappa * s.time) * eval_cubic_source(a, s.time, s.u);
    out.homogeneous.push_back(homogeneous_norm(F, m));
    out.mean_abs.push_back(std::abs(F.mean()));
  }
  return out;
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult res;
  const double m = cfg.m;
  const WaveState init = cfg.initial();
  json solver_info{{"name", to_string(cfg.solver)}};

  switch (cfg.solver) {
    case Solver::linear_only:
      res.trajectory = solve_linear(init, Forcing{}, cfg.t_end, cfg.output_samples());
      break;
    case Solver::picard: {
      PicardOptions opt;
      opt.samples = cfg.picard.samples;
      opt.output_samples = cfg.output_samples();
      auto pr = picard_solve(init, cfg.source, cfg.t_end, cfg.picard.R, cfg.picard.tol,
                             cfg.picard.max_iter, opt);
      const auto& r = pr.report;
      solver_info["picard"] = {{"status", to_string(r.status)},
                               {"iterates", r.iterates},
                               {"contraction_factors", r.contraction_factors},
                               {"distances", r.distances},
                               {"final_residual", std::isfinite(r.final_residual)
                                                      ? json(r.final_residual) : json(nullptr)},
                               {"sup_norm", r.sup_norm},
                               {"R", cfg.picard.R},
                               {"tol", cfg.picard.tol}};
      res.diverged = !r.converged;
      res.trajectory = std::move(pr.trajectory);
      break;
    }
    case Solver::timestep: {
      TimestepOptions opt;
      opt.sample_every = cfg.sample_every;
      res.trajectory = timestep_solve(init, cfg.source, cfg.t_end, cfg.dt, opt);
      solver_info["timestep"] = {{"dt", cfg.dt}, {"sample_every", cfg.sample_every}};
      if (res.trajectory.blowup_suspected) {
        res.blowup_time = res.trajectory.blowup_time;
        solver_info["timestep"]["overflow_time"] = *res.trajectory.blowup_time;
        solver_info["timestep"]["last_valid_time"] = res.trajectory.last_valid_time;
        if (!cfg.wants("blowup")) res.diverged = true;
      }
      break;
    }
  }
  const Trajectory& tr = res.trajectory;
  for (const auto& s : tr.states) {
    if (!s.is_finite()) res.diverged = true;
  }

  EnergyReport er;
  energy_and_bound(tr, m, cfg.source, er);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto& s = tr.states[i];
    res.rows.push_back({s.time, sobolev_norm(s.u, m + 1.0), homogeneous_norm(s.u, m + 1.0),
                        s.u.mean(), er.energy[i], er.gronwall_bound[i],
                        one_plus_u_range(s.u).first});
  }

  std::vector<CheckResult> checks;
  for (const std::string& name : cfg.checks) {
    if (name == "energy") {
      const auto forcing = detail::forcing_norms(tr, cfg.source, m);
      double worst = 0.0;
      bool ok = true;
      for (const auto& s : tr.states) {
        const double bound = linear_energy_bound(init, forcing, s.time, m);
        const double val = sobolev_norm_squared(s.u, m + 1.0);
        if (val > bound * (1.0 + 1e-6) + 1e-300) ok = false;
        if (bound > 0.0) worst = std::max(worst, val / bound);
      }
      checks.push_back(detail::verdict(name, ok, {{"max_ratio", worst}}));
    } else if (name == "gronwall") {
      checks.push_back(detail::verdict(name, er.gronwall_holds, {{"warnings", er.warnings}}));
    } else if (name == "decay") {
      if (tr.back().time < 10.0 / cfg.grid.kappa * (1.0 - 1e-12)) {
        checks.push_back(detail::not_applicable(name, "run shorter than 10/kappa"));
        continue;
      }
      const EnergyReport d = decay_diagnostics(tr, m, cfg.source);
      const double final_uh = d.uh_norm.back();
      checks.push_back(detail::verdict(name, final_uh <= cfg.decay_tolerance,
                                       {{"final_uh_norm", final_uh},
                                        {"tolerance", cfg.decay_tolerance},
                                        {"mu", d.mu},
                                        {"mean_tail", d.mean_tail},
                                        {"alpha", d.alpha},
                                        {"beta", d.beta},
                                        {"eps1", d.eps1},
                                        {"epsilon_tilde", d.epsilon_tilde},
                                        {"metric_within", d.metric_within},
                                        {"energy_monotone", d.energy_monotone}}));
    } else if (name == "blowup") {
      if (!cfg.source.spatially_constant() || !cfg.source.time_independent()) {
        checks.push_back(detail::not_applicable(name, "certificate needs a constant source"));
        continue;
      }
      const double a0 = cfg.source.a0();
      const auto cert = certificate(a0, cfg.f.mean(), cfg.g.mean(), cfg.grid.kappa);
      const auto hyp = check_hypotheses(a0, cfg.f.mean(), cfg.g.mean(), cfg.f, cfg.g, cfg.grid.kappa);
      res.certificate = cert;
      const auto pb = detect_pde_blowup(tr, m);
      json detail{{"hypotheses_ok", hyp.all()},
                  {"detected", pb.blowup_time ? json(*pb.blowup_time) : json(nullptr)},
                  {"mean_lower_bound_holds", pb.mean_lower_bound_holds}};
      if (pb.blowup_time) res.blowup_time = pb.blowup_time;
      if (!cert.certifies_blowup || !hyp.all()) {
        checks.push_back({name, "not-applicable", detail});
      } else if (pb.blowup_time) {
        checks.push_back(detail::verdict(name, *pb.blowup_time <= *cert.t0, detail));
      } else if (cfg.t_end < *cert.t0) {
        detail["reason"] = "run ends before the certified time";
        checks.push_back({name, "not-applicable", detail});
      } else {
        checks.push_back(detail::verdict(name, false, detail));
      }
    } else if (name == "positivity") {
      std::vector<double> probes;
      for (const auto& s : tr.states) probes.push_back(s.time);
      const auto hyp = check_positivity_hypotheses(cfg.f, cfg.g, cfg.source, probes);
      const auto mn = min_one_plus_u(tr);
      json detail{{"min_one_plus_u", mn.value},
                  {"time", mn.time},
                  {"location", mn.location},
                  {"min_a", hyp.min_a},
                  {"min_one_plus_f", hyp.min_one_plus_f},
                  {"min_g", hyp.min_g},
                  {"min_laplacian_f", hyp.min_laplacian_f}};
      if (!hyp.all()) {
        detail["reason"] = "hypotheses do not hold";
        checks.push_back({name, "not-applicable", detail});
      } else {
        checks.push_back(detail::verdict(name, mn.value > 0.0, detail));
      }
    } else if (name == "jensen") {
      int tested = 0;
      bool ok = true;
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& s : tr.states) {
        if (one_plus_u_range(s.u).first < 0.0) continue;
        const double a_min = cfg.source.min_on_grid(s.time, cfg.grid);
        if (a_min < 0.0) continue;
        const auto jg = jensen_gap(s.u, cfg.source, s.time, a_min);
        ++tested;
        worst = std::min(worst, jg.lhs - jg.rhs);
        if (!jg.holds()) ok = false;
      }
      if (tested == 0) {
        checks.push_back(detail::not_applicable(name, "no sample with 1+u >= 0 and a >= 0"));
      } else {
        checks.push_back(detail::verdict(name, ok, {{"samples", tested}, {"min_gap", worst}}));
      }
    }
  }

  bool failed = false;
  json cj = json::array();
  for (const auto& c : checks) {
    failed = failed || c.status == "fail";
    cj.push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
  }
  res.exit_code = res.diverged ? exit_code::not_converged
                               : failed ? exit_code::check_failed : exit_code::pass;

  json summary{{"times", json::array()},
               {"sobolev_norm_m1", json::array()},
               {"mean_u", json::array()}};
  for (const auto& r : res.rows) {
    summary["times"].push_back(r.t);
    summary["sobolev_norm_m1"].push_back(std::isfinite(r.sobolev_norm_m1) ? json(r.sobolev_norm_m1)
                                                                          : json(nullptr));
    summary["mean_u"].push_back(std::isfinite(r.mean_u) ? json(r.mean_u) : json(nullptr));
  }
  res.report = {{"config", cfg.echo},
                {"solver", solver_info},
                {"trajectory", summary},
                {"checks", cj},
                {"exit_code", res.exit_code}};
  if (res.certificate) res.report["certificate"] = to_json(*res.certificate);
  return res;
}

/// Runs the experiment and writes trajectory.csv, report.json and norms.svg.
inline RunResult run_and_write(const ExperimentConfig& cfg) {
  RunResult res = run_experiment(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  write_atomic(dir / "trajectory.csv", trajectory_csv(res.rows));
  write_atomic(dir / "report.json", res.report.dump(2) + "\n");
  if (cfg.plot) {
    std::vector<std::pair<std::string, double>> markers;
    if (res.certificate && res.certificate->t0) markers.push_back({"t0", *res.certificate->t0});
    if (res.blowup_time) markers.push_back({"blow-up", *res.blowup_time});
    write_atomic(dir / "norms.svg", norms_svg(res.rows, markers));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps

/// NORDSTROM_THREADS caps the worker count; unset or invalid means no cap.
inline int thread_cap(int requested) {
  int n = std::max(1, requested);
  if (const char* env = std::getenv("NORDSTROM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

/// Replaces the number at a dotted path ("grid.kappa", "source.constant").
inline void set_numeric(json& j, const std::string& path, double value) {
  json* node = &j;
  std::stringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    if (!node->is_object() || !node->contains(key)) throw ConfigError(path, "no such field");
    node = &(*node)[key];
  }
  if (!node->is_number()) throw ConfigError(path, "not a numeric field");
  if (node->is_number_integer()) {
    if (value != std::floor(value)) throw ConfigError(path, "integer field");
    *node = static_cast<long long>(value);
  } else {
    *node = value;
  }
}

struct SweepRow {
  double value = 0.0;
  int exit_code = 0;
  std::string error;
  std::string failed_checks;
  double final_t = std::numeric_limits<double>::quiet_NaN();
  double final_sobolev_norm_m1 = std::numeric_limits<double>::quiet_NaN();
  double final_homogeneous_norm = std::numeric_limits<double>::quiet_NaN();
  double final_mean_u = std::numeric_limits<double>::quiet_NaN();
  double min_one_plus_u = std::numeric_limits<double>::quiet_NaN();
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  double decay_exponent = std::numeric_limits<double>::quiet_NaN();
};

inline std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
  auto quote = [](std::string s) {
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  };
  std::ostringstream out;
  out << "index," << param << ",exit_code,final_t,final_sobolev_norm_m1,final_homogeneous_norm,"
      << "final_mean_u,min_one_plus_u,blowup_time,decay_exponent,failed_checks,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << i << ',' << fmt17(r.value) << ',' << r.exit_code << ',' << fmt17(r.final_t) << ','
        << fmt17(r.final_sobolev_norm_m1) << ',' << fmt17(r.final_homogeneous_norm) << ','
        << fmt17(r.final_mean_u) << ',' << fmt17(r.min_one_plus_u) << ',' << fmt17(r.blowup_time)
        << ',' << fmt17(r.decay_exponent) << ',' << quote(r.failed_checks) << ',' << quote(r.error)
        << '\n';
  }
  return out.str();
}

inline SweepRow sweep_one(const json& base, const std::string& param, double value,
                          const std::string& dir) {
  SweepRow row;
  row.value = value;
  try {
    json j = base;
    set_numeric(j, param, value);
    j["output_dir"] = dir;
    const ExperimentConfig cfg = parse_config(j);
    const RunResult r = run_and_write(cfg);
    row.exit_code = r.exit_code;
    if (!r.rows.empty()) {
      const auto& last = r.rows.back();
      row.final_t = last.t;
      row.final_sobolev_norm_m1 = last.sobolev_norm_m1;
      row.final_homogeneous_norm = last.homogeneous_norm;
      row.final_mean_u = last.mean_u;
      row.min_one_plus_u = min_one_plus_u(r.trajectory).value;
      std::vector<double> t, y;
      for (const auto& rr : r.rows) {
        t.push_back(rr.t);
        y.push_back(std::sqrt(rr.energy));
      }
      if (last.energy > 0.0 && last.t > 0.0) {
        row.decay_exponent = fit_decay_exponent(t, y, 0.5 * last.t, last.t);
      }
    }
    if (r.blowup_time) row.blowup_time = *r.blowup_time;
    for (const auto& c : r.report["checks"]) {
      if (c["status"] == "fail") {
        if (!row.failed_checks.empty()) row.failed_checks += ';';
        row.failed_checks += c["name"].get<std::string>();
      }
    }
  } catch (const ConfigError& e) {
    row.exit_code = exit_code::config_error;
    row.error = e.what();
  } catch (const std::exception& e) {
    row.exit_code = exit_code::not_converged;
    row.error = e.what();
  }
  return row;
}

/// One row per value in input order; runs are distributed over a thread pool.
inline std::vector<SweepRow> sweep(const json& base, const std::string& param,
                                   const std::vector<double>& values, int parallel,
                                   const std::string& output_dir) {
  {
    json probe = base;
    set_numeric(probe, param, values.empty() ? 0.0 : values.front());
  }
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < values.size();) {
      const std::string dir = (std::filesystem::path(output_dir) / ("run_" + std::to_string(i))).string();
      rows[i] = sweep_one(base, param, values[i], dir);
    }
  };
  const int n = std::min<int>(thread_cap(parallel), int(std::max<std::size_t>(1, values.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

}  // namespace nordstrom
