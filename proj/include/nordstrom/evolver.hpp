#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/linear_solver.hpp"
#include "nordstrom/nonlinear.hpp"
#include "nordstrom/quadrature.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/wave_state.hpp"

namespace nordstrom {

inline constexpr double overflow_threshold = 1e8;

/// ||a - b||_{H^m} without forming the difference.
inline double sobolev_distance(const SpectralField& a, const SpectralField& b, double m) {
  a.check_same(b);
  const auto& w = lattice_weights(a.n(), m);
  const auto& x = a.coeffs();
  const auto& y = b.coeffs();
  double acc = std::norm(x[0] - y[0]);
  for (std::size_t s = 1; s < x.size(); ++s) acc += w[s] * std::norm(x[s] - y[s]);
  return std::sqrt(acc);
}

/// sup over shared samples of ||u - v||_{H^m}.
inline double trajectory_distance(const Trajectory& u, const Trajectory& v, double m) {
  if (u.size() != v.size()) throw DimensionError("trajectories have different sample counts");
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    worst = std::max(worst, sobolev_distance(u.states[i].u, v.states[i].u, m));
  }
  return worst;
}

inline double sup_norm(const Trajectory& u, double m) {
  double worst = 0.0;
  for (const auto& s : u.states) worst = std::max(worst, sobolev_norm(s.u, m));
  return worst;
}

// ---------------------------------------------------------------------------
// Fixed-point iteration

enum class PicardStatus { converged, not_converged, left_ball };

inline std::string to_string(PicardStatus s) {
  switch (s) {
    case PicardStatus::converged:
      return "converged";
    case PicardStatus::left_ball:
      return "left_ball";
    default:
      return "not_converged";
  }
}

struct PicardReport {
  int iterates = 0;
  std::vector<double> contraction_factors;
  std::vector<double> distances;  // d_n = sup_t ||u_{n+1} - u_n||_{H^{m+1}}
  double final_residual = std::numeric_limits<double>::infinity();
  double sup_norm = 0.0;          // sup_t ||u||_{H^{m+1}} of the returned iterate
  bool converged = false;
  PicardStatus status = PicardStatus::not_converged;
};

struct PicardOptions {
  int samples = 200;
  int output_samples = 0;  // > samples: re-evaluate the fixed point on a denser grid
};

struct PicardResult {
  Trajectory trajectory;
  PicardReport report;
};

namespace detail {

inline Trajectory frozen_trajectory(const SpectralField& f, double t_end, int samples) {
  Trajectory tr;
  const double dt = t_end / (samples - 1);
  const SpectralField zero(f.grid());
  for (int i = 0; i < samples; ++i) {
    tr.states.emplace_back(i == samples - 1 ? t_end : i * dt, f, zero);
  }
  tr.last_valid_time = t_end;
  return tr;
}

/// sup_t ||e^{-kappa t}(a(1+v)^3 - a(1+u)^3)||_{H^m}: the exact PDE residual of
/// u = L(v) on the shared samples.
inline double fixed_point_residual(const Trajectory& u, const Trajectory& v, const SourceSpec& a,
                                   double m) {
  const double kappa = u.grid().kappa;
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = u.states[i].time;
    const SpectralField Fv = eval_cubic_source(a, t, v.states[i].u);
    const SpectralField Fu = eval_cubic_source(a, t, u.states[i].u);
    worst = std::max(worst, std::exp(-kappa * t) * sobolev_distance(Fv, Fu, m));
  }
  return worst;
}

}  // namespace detail

/// u = L(v): the linear solution driven by e^{-kappa t} a (1+v)^3.
inline Trajectory apply_linear_operator(const WaveState& initial, const SourceSpec& a,
                                        const Trajectory& v, double t_end, int samples) {
  Forcing forcing;
  if (!a.is_zero()) {
    forcing = [&](double t) { return eval_cubic_source(a, t, v.u_at(std::min(t, t_end))); };
  }
  return solve_linear(initial, forcing, t_end, samples);
}

/// Picard iteration u_{n+1} = L(u_n) from u_0 = f, on a uniform time grid.
inline PicardResult picard_solve(const WaveState& initial, const SourceSpec& a, double t_end,
                                 double R, double tol, int max_iter, PicardOptions opt = {}) {
  const GridSpec& grid = initial.grid();
  require_kappa(grid.kappa);
  const double m1 = grid.sobolev_order_m + 1.0;
  if (!(R > sobolev_norm(initial.u, m1))) {
    throw DomainError("ball radius must exceed the H^{m+1} norm of the initial data");
  }
  if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  const int samples = std::max(opt.samples, 3);

  PicardResult res;
  PicardReport& rep = res.report;
  Trajectory prev = detail::frozen_trajectory(initial.u, t_end, samples);
  Trajectory cur = apply_linear_operator(initial, a, prev, t_end, samples);

  for (int n = 0;; ++n) {
    rep.sup_norm = sup_norm(cur, m1);
    if (!(rep.sup_norm <= R)) {
      rep.status = PicardStatus::left_ball;
      rep.iterates = n + 1;
      break;
    }
    if (n >= 1) {
      const double d = rep.distances.back();
      if (d <= tol) {
        rep.final_residual = detail::fixed_point_residual(cur, prev, a, grid.sobolev_order_m);
        if (rep.final_residual <= tol) {
          rep.converged = true;
          rep.status = PicardStatus::converged;
          rep.iterates = n;
          break;
        }
      }
    }
    if (n >= max_iter) {
      rep.iterates = n;
      rep.final_residual = detail::fixed_point_residual(cur, prev, a, grid.sobolev_order_m);
      break;
    }
    Trajectory next = apply_linear_operator(initial, a, cur, t_end, samples);
    const double d = trajectory_distance(next, cur, m1);
    if (rep.distances.empty()) {
      rep.distances.push_back(trajectory_distance(cur, prev, m1));
    }
    const double d_prev = rep.distances.back();
    rep.contraction_factors.push_back(d_prev > 0.0 ? d / d_prev : 0.0);
    rep.distances.push_back(d);
    prev = std::move(cur);
    cur = std::move(next);
  }

  if (opt.output_samples > samples && rep.converged) {
    res.trajectory = apply_linear_operator(initial, a, prev, t_end, opt.output_samples);
  } else {
    res.trajectory = std::move(cur);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Duhamel time stepper

struct TimestepOptions {
  int sample_every = 1;
  double overflow = overflow_threshold;
};

namespace detail {

/// Exact homogeneous propagator and the linear-interpolation Duhamel weights
/// for one |k|^2 over a step of length h.
struct StepCoefficients {
  double p11, p12, p21, p22;
  double w0u, w1u, w0v, w1v;  // u and u_t weights of N_n and N_{n+1}
};

inline StepCoefficients step_coefficients(long norm2, double kappa, double h) {
  StepCoefficients c{};
  auto kernel = [&](double r, double& ku, double& kv) {
    if (norm2 == 0) {
      ku = -std::expm1(-2.0 * kappa * r) / (2.0 * kappa);
      kv = std::exp(-2.0 * kappa * r);
    } else {
      const double w = mode_frequency(norm2, kappa);
      const double e = std::exp(-kappa * r);
      ku = e * std::sin(w * r) / w;
      kv = e * (std::cos(w * r) - kappa * std::sin(w * r) / w);
    }
  };
  if (norm2 == 0) {
    c.p11 = 1.0;
    c.p12 = -std::expm1(-2.0 * kappa * h) / (2.0 * kappa);
    c.p21 = 0.0;
    c.p22 = std::exp(-2.0 * kappa * h);
  } else {
    const double w = mode_frequency(norm2, kappa);
    const double e = std::exp(-kappa * h);
    const double cs = std::cos(w * h);
    const double sn = std::sin(w * h) / w;
    c.p11 = e * (cs + kappa * sn);
    c.p12 = e * sn;
    c.p21 = -double(norm2) * e * sn;
    c.p22 = e * (cs - kappa * sn);
  }
  const double omega = norm2 == 0 ? 0.0 : mode_frequency(norm2, kappa);
  const int panels = std::max(1, int(std::ceil(h / panel_width(omega) - 1e-12)));
  const double ph = h / panels;
  const Rule& rule = gauss_legendre(duhamel_nodes);
  for (int p = 0; p < panels; ++p) {
    for (const auto& nd : map_rule(rule, p * ph, (p + 1) * ph)) {
      double ku, kv;
      kernel(h - nd.t, ku, kv);
      const double damp = std::exp(-kappa * nd.t);
      const double lam = nd.t / h;
      c.w0u += nd.w * ku * damp * (1.0 - lam);
      c.w1u += nd.w * ku * damp * lam;
      c.w0v += nd.w * kv * damp * (1.0 - lam);
      c.w1v += nd.w * kv * damp * lam;
    }
  }
  return c;
}

}  // namespace detail

/// Advances every mode with the exact linear propagator and a two-stage
/// (predictor with frozen source, corrector with linearly interpolated
/// source) Duhamel quadrature.  Stops when ||u||_{H^{m+1}} exceeds the
/// overflow threshold or becomes non-finite.
inline Trajectory timestep_solve(const WaveState& initial, const SourceSpec& a, double t_end,
                                 double dt, TimestepOptions opt = {}) {
  const GridSpec& grid = initial.grid();
  const double kappa = grid.kappa;
  require_kappa(kappa);
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
  const double m1 = grid.sobolev_order_m + 1.0;
  const int steps = std::max(1, int(std::ceil(t_end / dt - 1e-9)));
  const double h = t_end / steps;
  const int stride = std::max(1, opt.sample_every);

  const Lattice& lat = lattice(grid.n_per_dim);
  std::map<long, int> distinct;
  for (long q : lat.norm2) distinct.emplace(q, 0);
  std::vector<detail::StepCoefficients> coef;
  for (auto& [q, idx] : distinct) {
    idx = int(coef.size());
    coef.push_back(detail::step_coefficients(q, kappa, h));
  }
  std::vector<int> group(lat.norm2.size());
  for (std::size_t s = 0; s < group.size(); ++s) group[s] = distinct[lat.norm2[s]];

  Trajectory tr;
  tr.states.push_back(initial);
  tr.states.back().time = 0.0;
  tr.last_valid_time = 0.0;
  if (t_end == 0.0) return tr;

  const bool forced = !a.is_zero();
  WaveState cur = tr.states.back();
  SpectralField N = forced ? eval_cubic_source(a, 0.0, cur.u) : SpectralField(grid);
  const std::size_t slots = grid.points();

  auto advance = [&](const WaveState& s, const SpectralField& Na, const SpectralField& Nb,
                     double scale, WaveState& out) {
    const auto& u = s.u.coeffs();
    const auto& v = s.u_t.coeffs();
    const auto& na = Na.coeffs();
    const auto& nb = Nb.coeffs();
    auto& ou = out.u.coeffs();
    auto& ov = out.u_t.coeffs();
    for (std::size_t k = 0; k < slots; ++k) {
      const auto& c = coef[group[k]];
      ou[k] = c.p11 * u[k] + c.p12 * v[k];
      ov[k] = c.p21 * u[k] + c.p22 * v[k];
      if (forced) {
        ou[k] += scale * (c.w0u * na[k] + c.w1u * nb[k]);
        ov[k] += scale * (c.w0v * na[k] + c.w1v * nb[k]);
      }
    }
  };

  WaveState pred{0.0, SpectralField(grid), SpectralField(grid)};
  WaveState next{0.0, SpectralField(grid), SpectralField(grid)};
  for (int j = 0; j < steps; ++j) {
    const double tn = j * h;
    const double t1 = j + 1 == steps ? t_end : (j + 1) * h;
    const double scale = std::exp(-kappa * tn);
    if (forced) {
      advance(cur, N, N, scale, pred);
      const SpectralField Np = eval_cubic_source(a, t1, pred.u);
      advance(cur, N, Np, scale, next);
    } else {
      advance(cur, N, N, scale, next);
    }
    next.time = t1;
    const double norm = sobolev_norm(next.u, m1);
    if (!std::isfinite(norm) || norm > opt.overflow || !next.is_finite()) {
      tr.blowup_suspected = true;
      tr.blowup_time = t1;
      tr.last_valid_time = tn;
      if (tr.states.back().time != tn) tr.states.push_back(cur);
      return tr;
    }
    std::swap(cur, next);
    if (forced) N = eval_cubic_source(a, t1, cur.u);
    if ((j + 1) % stride == 0 || j + 1 == steps) tr.states.push_back(cur);
  }
  tr.last_valid_time = t_end;
  return tr;
}

// ---------------------------------------------------------------------------
// PDE residual

/// max over interior samples of ||u_tt + 2 kappa u_t - Lap u - e^{-kappa t} a (1+u)^3||_{H^m},
/// with u_tt from central differences of the stored u_t (fourth order when
/// five or more uniform samples are available).
inline double pde_residual(const Trajectory& tr, const SourceSpec& a) {
  if (tr.size() < 3) throw DomainError("pde_residual needs at least three samples");
  const GridSpec& grid = tr.grid();
  const double kappa = grid.kappa;
  const double m = grid.sobolev_order_m;
  const std::size_t n = tr.size();
  const double h = (tr.back().time - tr.front().time) / double(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const double step = tr.states[i].time - tr.states[i - 1].time;
    if (std::abs(step - h) > 1e-9 * std::max(1.0, h)) {
      throw DomainError("pde_residual needs uniformly spaced samples");
    }
  }
  const bool fourth = n >= 5;
  const std::size_t lo = fourth ? 2 : 1;
  const std::size_t hi = fourth ? n - 2 : n - 1;
  const Lattice& lat = lattice(grid.n_per_dim);
  double worst = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const WaveState& s = tr.states[i];
    const SpectralField F = eval_cubic_source(a, s.time, s.u);
    const double e = std::exp(-kappa * s.time);
    SpectralField r(grid);
    auto& rc = r.coeffs();
    const auto& u = s.u.coeffs();
    const auto& ut = s.u_t.coeffs();
    const auto& fc = F.coeffs();
    for (std::size_t k = 0; k < rc.size(); ++k) {
      complex utt;
      if (fourth) {
        utt = (-tr.states[i + 2].u_t.coeffs()[k] + 8.0 * tr.states[i + 1].u_t.coeffs()[k] -
               8.0 * tr.states[i - 1].u_t.coeffs()[k] + tr.states[i - 2].u_t.coeffs()[k]) /
              (12.0 * h);
      } else {
        utt = (tr.states[i + 1].u_t.coeffs()[k] - tr.states[i - 1].u_t.coeffs()[k]) / (2.0 * h);
      }
      rc[k] = utt + 2.0 * kappa * ut[k] + double(lat.norm2[k]) * u[k] - e * fc[k];
    }
    worst = std::max(worst, sobolev_norm(r, m));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Small-data thresholds

struct SurrogateConstants {
  double C_e = 0.0;  // sup |w|_inf / ||w||_{H^m}
  double C_m = 0.0;  // sup ||v w||_{H^m} / (||v||_{H^m} ||w||_{H^m})
  double C_R = 0.0;  // sup over the ball of C_e ||(1+v)^3||_{H^m}
  double K_R = 0.0;  // C_m sup ||(1+v1)^3 - (1+v2)^3||_{H^m} / ||v1 - v2||_{H^m}
  int probes = 0;
};

/// Bounds are on norms (square roots of the squared-norm conditions):
/// [0] ||f||_{H^{m+1}}, [1] ||g||_{H^m}, [2] and [3] sup_t ||a||_{H^m}.
struct ThresholdReport {
  double M1 = 0.0, M2 = 0.0, M3 = 0.0;
  std::array<double, 4> bounds{};
  double epsilon = 0.0;
  SurrogateConstants surrogate_constants;
  double R = 0.0;

  double source_bound() const { return std::min(bounds[2], bounds[3]); }
  bool admits(double f_norm, double g_norm, double a_norm) const {
    return f_norm <= bounds[0] && g_norm <= bounds[1] && a_norm <= source_bound();
  }
};

/// max_{t >= 0} of a unimodal-or-decreasing profile, by scan and Brent refinement.
inline double maximize_profile(const std::function<double(double)>& fn, double t_max) {
  const int scan = 4000;
  double best_t = 0.0, best = fn(0.0);
  for (int i = 1; i <= scan; ++i) {
    const double t = t_max * i / scan;
    const double v = fn(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  const double lo = std::max(0.0, best_t - t_max / scan);
  const double hi = std::min(t_max, best_t + t_max / scan);
  auto neg = [&](double t) { return -fn(t); };
  const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 52);
  return std::max(best, -r.second);
}

namespace detail {

inline SpectralField random_field(const GridSpec& g, int band, double radius, double m,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SpectralField f(g);
  for (int k1 = -band; k1 <= band; ++k1) {
    for (int k2 = -band; k2 <= band; ++k2) {
      for (int k3 = -band; k3 <= band; ++k3) {
        const Wavevector k{k1, k2, k3};
        const Wavevector nk = -k;
        if (std::tie(nk.k1, nk.k2, nk.k3) < std::tie(k.k1, k.k2, k.k3)) continue;
        const double decay = 1.0 / (1.0 + double(k.norm2()));
        complex c(normal(rng) * decay, k.is_zero() ? 0.0 : normal(rng) * decay);
        f.set_mode(k, c);
      }
    }
  }
  const double nrm = sobolev_norm(f, m);
  if (nrm > 0.0) f *= radius * std::cbrt(unit(rng)) / nrm;
  return f;
}

inline double sup_abs(const SpectralField& f) {
  const auto v = inverse_transform(f);
  double w = 0.0;
  for (double x : v) w = std::max(w, std::abs(x));
  return w;
}

}  // namespace detail

inline ThresholdReport compute_thresholds(double kappa, double m, double R, int probe_budget,
                                          std::uint64_t seed = 20240607ULL) {
  require_kappa(kappa);
  if (!(R > 0.0)) throw DomainError("R must be positive");
  if (!(m >= 0.0)) throw DomainError("m must be non-negative");
  ThresholdReport rep;
  rep.R = R;
  const double t_max = 60.0 / kappa;
  rep.M1 = maximize_profile(
      [&](double t) { return 2.0 * std::exp(-2.0 * kappa * t) * (1.0 + 2.0 * kappa * kappa) * (1.0 + t * t); },
      t_max);
  rep.M2 = maximize_profile(
      [&](double t) { return 4.0 * std::exp(-2.0 * kappa * t) * (1.0 + t * t); }, t_max);
  rep.M3 = maximize_profile(
      [&](double t) { return std::exp(-2.0 * kappa * t) * t * t * (1.0 + t * t); }, t_max);

  // Empirical stand-ins for the embedding / multiplication constants.
  const GridSpec probe_grid(16, m, kappa);
  const int band = 3;
  std::mt19937_64 rng(seed);
  SurrogateConstants& sc = rep.surrogate_constants;
  const SourceSpec one = SourceSpec::constant(1.0);
  const SpectralField zero(probe_grid);
  const int budget = std::max(1, probe_budget);
  for (int i = 0; i < budget; ++i) {
    const SpectralField w = detail::random_field(probe_grid, band, 1.0, m, rng);
    const SpectralField v = detail::random_field(probe_grid, band, 1.0, m, rng);
    const double nw = sobolev_norm(w, m);
    const double nv = sobolev_norm(v, m);
    if (nw > 0.0) sc.C_e = std::max(sc.C_e, detail::sup_abs(w) / nw);
    if (nw > 0.0 && nv > 0.0) {
      const SpectralField vw = dealiased_product(v, w);
      sc.C_m = std::max(sc.C_m, sobolev_norm(vw, m) / (nv * nw));
    }
  }
  for (int i = 0; i < budget; ++i) {
    const SpectralField v1 = detail::random_field(probe_grid, band, R, m + 1.0, rng);
    const SpectralField v2 = detail::random_field(probe_grid, band, R, m + 1.0, rng);
    const SpectralField c1 = eval_cubic_source(one, 0.0, v1);
    const SpectralField c2 = eval_cubic_source(one, 0.0, v2);
    sc.C_R = std::max(sc.C_R, sc.C_e * sobolev_norm(c1, m));
    const double dv = sobolev_distance(v1, v2, m);
    if (dv > 0.0) sc.K_R = std::max(sc.K_R, sc.C_m * sobolev_distance(c1, c2, m) / dv);
  }
  sc.probes = budget;

  const double k2 = kappa * kappa;
  rep.bounds[0] = R / (2.0 * std::sqrt(std::max(rep.M1, 1.0)));
  rep.bounds[1] = R / (2.0 * std::sqrt(std::max(rep.M2, 1.0 / (4.0 * k2))));
  rep.bounds[2] = R / (std::sqrt(2.0) * sc.C_m * sc.C_R) /
                  (2.0 * std::sqrt(std::max(rep.M3, 1.0 / (4.0 * k2 * k2))));
  rep.bounds[3] = 1.0 / std::sqrt(2.0 * std::max(rep.M3, 1.0 / (4.0 * k2)) * sc.K_R * sc.K_R);
  rep.epsilon = *std::min_element(rep.bounds.begin(), rep.bounds.end());
  return rep;
}

}  // namespace nordstrom
