#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "nordstrom/nordstrom.hpp"
#include "nordstrom_verify/oracles.hpp"

namespace acceptance {

using namespace nordstrom;

struct Outcome {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("nordstrom_verify_" + std::to_string(::getpid()) + "_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Constant-data state on the smallest grid.
inline WaveState constant_state(double f0, double g0, double kappa, int n = 4) {
  const GridSpec g(n, 1.0, kappa);
  return {0.0, SpectralField::constant(g, f0), SpectralField::constant(g, g0)};
}

struct BlowupCase {
  double a0, f0, g0, kappa;
};

/// Twenty certified parameter sets, in a fixed order.
inline std::vector<BlowupCase> certified_cases() {
  std::vector<BlowupCase> out;
  for (double kappa : {0.3, 0.5, 0.7}) {
    for (double a0 : {8.0, 16.0, 64.0}) {
      for (double f0 : {0.0, 0.25}) {
        for (double g0 : {0.5, 1.0}) {
          if (out.size() < 20 && certificate(a0, f0, g0, kappa).certifies_blowup) {
            out.push_back({a0, f0, g0, kappa});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// 1. Per-mode closed forms against an adaptive ODE integration.
inline Outcome linear_oracle() {
  Outcome o{1, "linear mode solutions match adaptive ODE oracle (rel 1e-8)"};
  const std::vector<Wavevector> ks{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 3, 4}};
  const complex f(0.3, -0.2), g(0.1, 0.4);
  auto F = [](double t) { return complex(std::cos(1.3 * t), 0.5 * std::sin(0.7 * t)); };
  auto F0 = [](double t) { return complex(std::cos(1.3 * t), 0.0); };
  double worst = 0.0;
  for (double kappa : {0.1, 0.5, 0.9}) {
    for (const auto& k : ks) {
      for (bool forced : {false, true}) {
        std::vector<complex> ref, got;
        for (int i = 0; i <= 20; ++i) {
          const double t = 0.5 * i;
          if (k.is_zero()) {
            const ModeForcing mf{k, forced ? std::function<complex(double)>(F0) : nullptr};
            got.emplace_back(solve_mode_zero(f.real(), g.real(), mf, t, kappa), 0.0);
            ref.push_back(oracle::mode_ode(0.0, kappa, f.real(), g.real(),
                                           forced ? std::function<complex(double)>(F0) : nullptr, t));
          } else {
            const ModeForcing mf{k, forced ? std::function<complex(double)>(F) : nullptr};
            got.push_back(solve_mode_nonzero(k, f, g, mf, t, kappa));
            ref.push_back(oracle::mode_ode(double(k.norm2()), kappa, f, g,
                                           forced ? std::function<complex(double)>(F) : nullptr, t));
          }
        }
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
          scale = std::max(scale, std::abs(ref[i]));
          err = std::max(err, std::abs(ref[i] - got[i]));
        }
        worst = std::max(worst, err / scale);
      }
    }
  }
  o.passed = worst <= 1e-8;
  o.detail = "max rel err " + detail::sci(worst);
  return o;
}

// 2. Parseval, mean/homogeneous decomposition and the gradient identity.
inline Outcome spectral_identities() {
  Outcome o{2, "Parseval, norm decomposition, gradient identity (rel 1e-12)"};
  std::mt19937_64 rng(7);
  const GridSpec g(16, 1.0, 0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SpectralField f = oracle::random_field(g, 1 + trial % 7, 1.0, rng);
    const auto v = inverse_transform(f);
    double l2 = 0.0;
    for (double x : v) l2 += x * x;
    l2 /= double(v.size());
    double coeff = 0.0;
    for (const auto& c : f.coeffs()) coeff += std::norm(c);
    worst = std::max(worst, std::abs(l2 - coeff) / coeff);
    for (double m : {0.0, 1.0, 2.0, 3.0}) {
      const double full = sobolev_norm_squared(f, m);
      const double split = f.mean() * f.mean() + homogeneous_norm_squared(homogeneous_part(f), m);
      worst = std::max(worst, std::abs(full - split) / full);
      const double lhs = homogeneous_norm(f, m + 1.0);
      const double rhs = homogeneous_norm_vector(gradient(f), m);
      worst = std::max(worst, std::abs(lhs - rhs) / lhs);
    }
  }
  o.passed = worst <= 1e-12;
  o.detail = "max rel defect " + detail::sci(worst);
  return o;
}

// 3. Linear-estimate and Gronwall bounds dominate along test trajectories.
inline Outcome energy_bounds() {
  Outcome o{3, "linear and Gronwall energy bounds dominate (rel 1e-6)"};
  std::mt19937_64 rng(11);
  const GridSpec g(16, 1.0, 0.5);
  struct Case {
    WaveState init;
    SourceSpec a;
    bool timestep;
  };
  std::vector<Case> cases;
  cases.push_back({{0.0, oracle::random_field(g, 2, 0.05, rng), oracle::random_field(g, 2, 0.05, rng)},
                   SourceSpec::constant(0.0), false});
  cases.push_back({{0.0, oracle::random_field(g, 2, 0.02, rng), oracle::random_field(g, 2, 0.02, rng)},
                   SourceSpec::constant(0.05), true});
  cases.push_back({{0.0, oracle::random_field(g, 3, 0.02, rng), oracle::random_field(g, 1, 0.02, rng)},
                   SourceSpec(Envelope::exponential(-0.2), {{{0, 0, 0}, 0.1}, {{1, 0, 0}, 0.02}}), true});
  double worst_linear = 0.0, worst_gronwall = 0.0;
  for (const auto& c : cases) {
    const double t_end = 8.0;
    TimestepOptions opt;
    opt.sample_every = 10;
    const Trajectory tr = c.timestep ? timestep_solve(c.init, c.a, t_end, 0.01, opt)
                                     : solve_linear(c.init, Forcing{}, t_end, 161);
    const double m = 1.0;
    ForcingNormSamples fs;
    for (const auto& s : tr.states) {
      fs.times.push_back(s.time);
      const SpectralField F = std::exp(-0.5 * s.time) * eval_cubic_source(c.a, s.time, s.u);
      fs.homogeneous.push_back(c.a.is_zero() ? 0.0 : homogeneous_norm(F, m));
      fs.mean_abs.push_back(c.a.is_zero() ? 0.0 : std::abs(F.mean()));
    }
    for (const auto& s : tr.states) {
      const double b = linear_energy_bound(c.init, fs, s.time, m);
      worst_linear = std::max(worst_linear, sobolev_norm_squared(s.u, m + 1.0) / b);
    }
    EnergyReport er;
    energy_and_bound(tr, m, c.a, er);
    for (std::size_t i = 0; i < er.energy.size(); ++i) {
      if (er.gronwall_bound[i] > 0.0) {
        worst_gronwall = std::max(worst_gronwall, er.energy[i] / er.gronwall_bound[i]);
      }
    }
  }
  o.passed = worst_linear <= 1.0 + 1e-6 && worst_gronwall <= 1.0 + 1e-6;
  o.detail = "max ratio linear " + detail::sci(worst_linear) + ", Gronwall " +
             detail::sci(worst_gronwall);
  return o;
}

// 4. Small-data fixed point: contraction, residual and decay.
inline Outcome fixed_point_regime() {
  Outcome o{4, "small-data Picard converges, residual <= 10 tol, decays by 20/kappa"};
  const double kappa = 0.5, m = 1.0, R = 0.5, tol = 1e-8;
  const ThresholdReport th = compute_thresholds(kappa, m, R, 50, 20240607);
  const double a0 = 0.5 * th.epsilon;
  const GridSpec g(16, m, kappa);
  SpectralField f(g), v(g);
  f.set_mode({1, 0, 0}, 0.002);
  f.set_mode({0, 1, 1}, complex(0.0, 0.001));
  v.set_mode({0, 0, 1}, complex(0.003, 0.001));
  v.coeffs()[0] = 0.002;
  const double t_end = 20.0 / kappa;
  PicardOptions opt;
  opt.samples = 200;
  opt.output_samples = 801;
  const auto res = picard_solve({0.0, f, v}, SourceSpec::constant(a0), t_end, R, tol, 50, opt);
  bool contracting = !res.report.contraction_factors.empty();
  double worst_q = 0.0;
  for (double q : res.report.contraction_factors) {
    worst_q = std::max(worst_q, q);
    contracting = contracting && q < 1.0;
  }
  const double residual = pde_residual(res.trajectory, SourceSpec::constant(a0));
  const double uh_end = homogeneous_norm(res.trajectory.back().u, m + 1.0);
  const bool admitted = th.admits(sobolev_norm(f, m + 1.0), sobolev_norm(v, m), a0);
  o.passed = admitted && res.report.converged && contracting && residual <= 10.0 * tol &&
             uh_end < 1e-3;
  o.detail = "eps " + detail::sci(th.epsilon) + ", iterates " + std::to_string(res.report.iterates) +
             ", max q " + detail::sci(worst_q) + ", residual " + detail::sci(residual) +
             ", |u_h(40)| " + detail::sci(uh_end);
  return o;
}

// 5. Constant data: timestepper against the reduced ODE.
inline Outcome homogeneous_equivalence() {
  Outcome o{5, "constant data: timestepper vs reduced ODE (1e-7, blow-up time 2%)"};
  struct Case {
    double a0, f0, g0, kappa, t_end;
  };
  const std::vector<Case> cases{{8.0, 0.0, 1.0, 0.5, 2.0}, {0.5, 0.1, 0.2, 0.5, 10.0},
                                {2.0, 0.0, 0.5, 0.3, 5.0}, {20.0, 0.1, 1.0, 0.8, 2.0}};
  double worst = 0.0, worst_time = 0.0;
  bool ok = true;
  for (const auto& c : cases) {
    const ScalarOdeResult ode = integrate_F_ode(c.a0, c.f0, c.g0, c.kappa, 1e6, c.t_end);
    TimestepOptions opt;
    opt.sample_every = 40;
    const Trajectory tr =
        timestep_solve(detail::constant_state(c.f0, c.g0, c.kappa), SourceSpec::constant(c.a0),
                       c.t_end, 2.5e-5, opt);
    // Pointwise comparison up to 3/4 of the blow-up time.
    const double window = ode.blowup_time ? 0.75 * *ode.blowup_time : c.t_end;
    std::vector<double> times;
    for (std::size_t i = 0; i < ode.t.size(); ++i) {
      if (ode.t[i] > window) break;
      if (ode.t[i] > tr.back().time) break;
      times.push_back(ode.t[i]);
      const double u = tr.u_at(ode.t[i]).mean();
      worst = std::max(worst, std::abs(u - ode.F[i]) / std::max(1.0, std::abs(ode.F[i])));
    }
    const auto ref = oracle::homogeneous_ode(c.a0, c.f0, c.g0, c.kappa, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double u = tr.u_at(times[i]).mean();
      worst = std::max(worst, std::abs(u - ref[i]) / std::max(1.0, std::abs(ref[i])));
    }
    if (ode.blowup_time) {
      const auto pb = detect_pde_blowup(tr, 1.0);
      if (!pb.blowup_time) {
        ok = false;
        continue;
      }
      worst_time = std::max(worst_time, std::abs(*pb.blowup_time - *ode.blowup_time) / *ode.blowup_time);
    } else if (tr.blowup_suspected) {
      ok = false;
    }
  }
  o.passed = ok && worst <= 1e-7 && worst_time <= 0.02;
  o.detail = "max rel diff " + detail::sci(worst) + ", blow-up time rel diff " + detail::sci(worst_time);
  return o;
}

// 6. Certified parameters blow up no later than t0.
inline Outcome certificate_soundness() {
  Outcome o{6, "certified runs blow up by t0; reference tau0, t0"};
  const auto ref = certificate(8.0, 0.0, 1.0, 0.5);
  bool ok = ref.certifies_blowup && std::abs(ref.tau0 - 1.8935) <= 5e-4 && ref.t0 &&
            std::abs(*ref.t0 - 2.2393) <= 5e-4;
  const auto cases = detail::certified_cases();
  ok = ok && cases.size() == 20;
  double worst_margin = -1e300;
  for (const auto& c : cases) {
    const auto cert = certificate(c.a0, c.f0, c.g0, c.kappa);
    const Trajectory tr = timestep_solve(detail::constant_state(c.f0, c.g0, c.kappa),
                                         SourceSpec::constant(c.a0), *cert.t0 + 0.5, 1e-3);
    const auto pb = detect_pde_blowup(tr, 1.0);
    if (!pb.blowup_time) {
      ok = false;
      continue;
    }
    worst_margin = std::max(worst_margin, *pb.blowup_time - *cert.t0);
    if (*pb.blowup_time > *cert.t0) ok = false;
  }
  o.passed = ok;
  o.detail = "tau0 " + detail::sci(ref.tau0) + ", t0 " + detail::sci(ref.t0.value_or(NAN)) +
             ", cases " + std::to_string(cases.size()) + ", max (t_blow - t0) " +
             detail::sci(worst_margin);
  return o;
}

// 7. Jensen lower bound on random non-negative fields.
inline Outcome jensen() {
  Outcome o{7, "Jensen lower bound never violated (100 fields)"};
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0.1, 10.0);
  const GridSpec g(16, 1.0, 0.5);
  double worst = 1e300;
  int tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SpectralField u = oracle::random_field(g, 1 + trial % 5, 1.0, rng);
    const auto v = inverse_transform(u);
    const double lo = *std::min_element(v.begin(), v.end());
    if (1.0 + lo < 0.0) u *= 0.99 / -lo;
    const double a0 = U(rng);
    const auto jg = jensen_gap(u, SourceSpec::constant(a0), 0.0, a0);
    worst = std::min(worst, jg.lhs - jg.rhs);
    ++tested;
  }
  o.passed = tested == 100 && worst >= -1e-10;
  o.detail = "min (lhs - rhs) " + detail::sci(worst);
  return o;
}

// 8. Kirchhoff evaluator, monotone iteration, domination, positivity.
inline Outcome positivity() {
  Outcome o{8, "Kirchhoff oracle 1e-6; iteration monotone and dominated; 1+u > 0"};
  const double kappa = 0.5;
  const GridSpec g(8, 1.0, kappa);
  SpectralField f(g);
  f.set_mode({1, 0, 0}, 0.05);
  SpectralField h = f;
  h *= kappa;
  h.coeffs()[0] += kappa;
  const auto quad = sphere_rule(35);
  SpectralField p = f;
  p.coeffs()[0] += 1.0;
  double kirch = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const PointEvaluator ex(oracle::free_wave(p, h, t));
    for (const Point& x : {Point{0.0, 0.0, 0.0}, Point{1.1, 2.3, 0.4}, Point{5.0, 0.7, 3.3}}) {
      const double ref = ex(x);
      kirch = std::max(kirch, std::abs(kirchhoff_free(f, h, t, x, quad) - ref) / std::abs(ref));
    }
  }

  // Positivity hypotheses: constant f, g >= 0, a > 0.
  const GridSpec g16(16, 1.0, kappa);
  const SpectralField fc = SpectralField::constant(g16, 0.1);
  SpectralField gc = SpectralField::constant(g16, 0.1);
  gc.set_mode({1, 0, 0}, 0.01);
  const SourceSpec a(Envelope::constant(), {{{0, 0, 0}, 1.0}, {{0, 1, 0}, 0.125}});
  const auto hyp = check_positivity_hypotheses(fc, gc, a, {0.0, 1.0});
  const SpaceTimeGrid stg{16, 21, 1.0};
  const auto levels = kirchhoff_iterate(fc, gc, a, kappa, stg, 6);
  TimestepOptions opt;
  opt.sample_every = 25;
  const Trajectory tr = timestep_solve({0.0, fc, gc}, a, 1.0, 0.002, opt);
  double monotone = 1e300, dominated = -1e300;
  for (std::size_t l = 1; l + 1 < levels.size(); ++l) {
    for (int i = 0; i < stg.n_time; ++i) {
      for (std::size_t k = 0; k < g16.points(); ++k) {
        monotone = std::min(monotone, levels[l + 1].values[i][k] - levels[l].values[i][k]);
      }
    }
  }
  for (int i = 0; i < stg.n_time; ++i) {
    const auto& st = tr.states[std::size_t(i)];
    const auto u = inverse_transform(st.u);
    const double e = std::exp(kappa * st.time);
    for (std::size_t l = 1; l < levels.size(); ++l) {
      for (std::size_t k = 0; k < u.size(); ++k) {
        dominated = std::max(dominated, levels[l].values[i][k] - e * (1.0 + u[k]));
      }
    }
  }
  double min_pos = min_one_plus_u(tr).value;
  for (const auto& c : detail::certified_cases()) {
    const auto cert = certificate(c.a0, c.f0, c.g0, c.kappa);
    const Trajectory bt = timestep_solve(detail::constant_state(c.f0, c.g0, c.kappa),
                                         SourceSpec::constant(c.a0), *cert.t0 + 0.5, 1e-3);
    min_pos = std::min(min_pos, min_one_plus_u(bt).value);
  }
  o.passed = kirch <= 1e-6 && hyp.all() && monotone >= 0.0 && dominated <= 1e-6 && min_pos > 0.0;
  o.detail = "Kirchhoff rel err " + detail::sci(kirch) + ", min increment " + detail::sci(monotone) +
             ", max (phi_n - phi) " + detail::sci(dominated) + ", min(1+u) " + detail::sci(min_pos);
  return o;
}

// 9. Free damped waves: sqrt(E) decays at rate kappa.
inline Outcome decay_rate() {
  Outcome o{9, "decay exponent of sqrt(E) within 5% of kappa (a = 0)"};
  double worst = 0.0;
  std::string rates;
  for (double kappa : {0.1, 0.5, 0.9}) {
    const GridSpec g(8, 1.0, kappa);
    SpectralField f(g), v(g);
    f.set_mode({2, 0, 0}, 0.1);
    f.set_mode({1, 1, 1}, complex(0.0, 0.05));
    v.set_mode({0, 3, 0}, 0.02);
    const double t_lo = 2.0 / kappa, t_hi = 12.0 / kappa;
    const Trajectory tr = solve_linear({0.0, f, v}, Forcing{}, t_hi, 1201);
    std::vector<double> t, y;
    for (const auto& s : tr.states) {
      t.push_back(s.time);
      y.push_back(std::sqrt(energy(s, 1.0)));
    }
    const double rate = fit_decay_exponent(t, y, t_lo, t_hi);
    worst = std::max(worst, std::abs(rate - kappa) / kappa);
    rates += (rates.empty() ? "" : " ") + detail::sci(rate);
  }
  o.passed = worst <= 0.05;
  o.detail = "rates " + rates + ", max rel dev " + detail::sci(worst);
  return o;
}

// 10. Repeated runs and sweeps reproduce their files byte for byte.
inline Outcome determinism() {
  Outcome o{10, "repeated run and sweep output is bit-identical"};
  const auto dir = detail::scratch_dir("determinism");
  const json timestep = json::parse(R"({
    "grid": {"n_per_dim": 8, "kappa": 0.5}, "m": 1,
    "initial_data": {"f": [{"k": [1, 0, 0], "c": 0.01}], "g": {"constant": 0.2}},
    "source": {"envelope": {"kind": "exponential", "rate": -0.1},
               "modes": [{"k": [0, 0, 0], "c": 2.0}, {"k": [0, 1, 0], "c": 0.2}]},
    "t_end": 1.0, "dt": 0.01, "solver": "timestep", "timestep": {"sample_every": 5},
    "checks": ["energy", "gronwall", "positivity", "jensen"]})");
  const json picard = json::parse(R"({
    "grid": {"n_per_dim": 8, "kappa": 0.5}, "m": 1,
    "initial_data": {"f": [{"k": [1, 0, 0], "c": 0.002}], "g": {"constant": 0.001}},
    "source": {"constant": 0.01}, "t_end": 4.0, "dt": 0.1, "solver": "picard",
    "picard": {"samples": 60, "tol": 1e-10},
    "checks": ["energy", "gronwall", "jensen"]})");
  bool same = true;
  for (const auto& [name, base] : {std::pair{"timestep", timestep}, std::pair{"picard", picard}}) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      json j = base;
      j["output_dir"] = (dir / (std::string(name) + std::to_string(rep))).string();
      const auto r = run_and_write(parse_config(j));
      (void)r;
      std::string all;
      for (const char* file : {"trajectory.csv", "report.json", "norms.svg"}) {
        all += detail::slurp(dir / (std::string(name) + std::to_string(rep)) / file);
      }
      outputs.push_back(all);
    }
    // Output paths differ between repeats and appear in the config echo.
    std::string a = outputs[0], b = outputs[1];
    const std::string pa = (dir / (std::string(name) + "0")).string();
    const std::string pb = (dir / (std::string(name) + "1")).string();
    for (std::size_t pos; (pos = a.find(pa)) != std::string::npos;) a.replace(pos, pa.size(), "@");
    for (std::size_t pos; (pos = b.find(pb)) != std::string::npos;) b.replace(pos, pb.size(), "@");
    same = same && a == b && !a.empty();
  }
  json sweep_base = timestep;
  const std::vector<double> values{1.0, 2.0, 4.0};
  const auto serial = sweep(sweep_base, "t_end", values, 1, (dir / "sweep1").string());
  const auto parallel = sweep(sweep_base, "t_end", values, 3, (dir / "sweep3").string());
  same = same && sweep_csv("t_end", serial) == sweep_csv("t_end", parallel);
  std::filesystem::remove_all(dir);
  o.passed = same;
  o.detail = same ? "identical" : "outputs differ";
  return o;
}

inline std::vector<std::function<Outcome()>> all() {
  return {linear_oracle,         spectral_identities, energy_bounds, fixed_point_regime,
          homogeneous_equivalence, certificate_soundness, jensen,      positivity,
          decay_rate,            determinism};
}

/// Runs every criterion, one line each; returns the number of failures.
inline int run_all(std::ostream& out) {
  int failures = 0;
  const auto criteria = all();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& criterion = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome r{int(i + 1), "criterion " + std::to_string(i + 1)};
    try {
      r = criterion();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char head[32];
    std::snprintf(head, sizeof head, "[%s] %2d ", r.passed ? "PASS" : "FAIL", r.id);
    out << head << r.name << " -- " << r.detail << " (" << detail::sci(secs) << " s)" << std::endl;
    failures += !r.passed;
  }
  return failures;
}

}  // namespace acceptance
