#pragma once

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/linear_solver.hpp"
#include "nordstrom/nonlinear.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/wave_state.hpp"

namespace nordstrom {

// ---------------------------------------------------------------------------
// Hypotheses

struct BlowupHypotheses {
  bool a0_positive = false;
  bool one_plus_f_positive = false;     // min (1+f) > 0
  bool laplacian_f_nonnegative = false; // min Lap f >= -1e-12
  bool damped_velocity_nonnegative = false;  // min (kappa (1+f) + g) >= -1e-12
  bool g0_positive = false;
  bool lambda4_nonnegative = false;     // g0^2 - (a0/2)(1+f0)^4 <= 0

  bool all() const {
    return a0_positive && one_plus_f_positive && laplacian_f_nonnegative &&
           damped_velocity_nonnegative && g0_positive && lambda4_nonnegative;
  }
};

inline double grid_min(const SpectralField& f) {
  const auto v = inverse_transform(f);
  return *std::min_element(v.begin(), v.end());
}

inline BlowupHypotheses check_hypotheses(double a0, double f0_hat, double g0_hat,
                                         const SpectralField& f, const SpectralField& g,
                                         double kappa) {
  BlowupHypotheses h;
  h.a0_positive = a0 > 0.0;
  h.one_plus_f_positive = 1.0 + grid_min(f) > 0.0;
  h.laplacian_f_nonnegative = grid_min(laplacian(f)) >= -1e-12;
  SpectralField damped = g;
  damped.axpy(kappa, f);
  h.damped_velocity_nonnegative = kappa + grid_min(damped) >= -1e-12;
  h.g0_positive = g0_hat > 0.0;
  const double base = (1.0 + f0_hat) * (1.0 + f0_hat);
  h.lambda4_nonnegative = g0_hat * g0_hat - 0.5 * a0 * base * base <= 0.0;
  return h;
}

// ---------------------------------------------------------------------------
// Time map tau = 2 - e^{-2 kappa t}

inline double time_map(double t, double kappa) {
  if (!(t >= 0.0)) throw DomainError("time_map needs t >= 0");
  return 2.0 - std::exp(-2.0 * kappa * t);
}

inline double time_map_inverse(double tau, double kappa) {
  if (!(tau >= 1.0 && tau < 2.0)) throw DomainError("time_map_inverse needs 1 <= tau < 2");
  return -std::log(2.0 - tau) / (2.0 * kappa);
}

// ---------------------------------------------------------------------------
// Certificate

struct BlowupCertificate {
  double a0 = 0.0, f0_hat = 0.0, g0_hat = 0.0, kappa = 0.0;
  double lambda4 = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double tau0 = std::numeric_limits<double>::infinity();
  std::optional<double> t0;
  bool a0_positive = false;
  bool one_plus_f0_positive = false;
  bool g0_positive = false;
  bool lambda4_nonnegative = false;
  bool certifies_blowup = false;
  bool inconclusive = false;  // tau0 within 1e-12 of 2
  std::vector<std::string> reasons;

  bool hypotheses_ok() const {
    return a0_positive && one_plus_f0_positive && g0_positive && lambda4_nonnegative;
  }
};

inline BlowupCertificate certificate(double a0, double f0_hat, double g0_hat, double kappa) {
  require_kappa(kappa);
  BlowupCertificate c;
  c.a0 = a0;
  c.f0_hat = f0_hat;
  c.g0_hat = g0_hat;
  c.kappa = kappa;
  c.a0_positive = a0 > 0.0;
  c.one_plus_f0_positive = 1.0 + f0_hat > 0.0;
  c.g0_positive = g0_hat > 0.0;
  if (!c.a0_positive) c.reasons.push_back("a0 > 0 required");
  if (!c.one_plus_f0_positive) c.reasons.push_back("1 + f0 > 0 required");
  if (!c.g0_positive) c.reasons.push_back("g0 > 0 required");
  if (!c.a0_positive) return c;

  const double p = 1.0 + f0_hat;
  const double p4 = p * p * p * p;
  c.lambda4 = p4 - 2.0 * g0_hat * g0_hat / a0;
  c.lambda4_nonnegative = c.lambda4 >= 0.0;
  if (!c.lambda4_nonnegative) {
    c.reasons.push_back("g0^2 <= (a0/2)(1+f0)^4 required (lambda^4 < 0)");
    return c;
  }
  if (!c.one_plus_f0_positive) return c;
  // 1 + f0 - lambda = p (1 - (1-z)^{1/4}) with z = 2 g0^2 / (a0 p^4), kept accurate for small z.
  const double z = 2.0 * g0_hat * g0_hat / (a0 * p4);
  const double gap = -std::expm1(0.25 * std::log1p(-z));
  c.lambda = p * (1.0 - gap);
  c.beta = gap / (2.0 - gap);
  if (c.lambda > 0.0 && c.beta > 0.0) {
    c.tau0 = std::sqrt(2.0) * kappa / (c.lambda * std::sqrt(a0)) * std::log(1.0 / c.beta) + 1.0;
  } else {
    c.tau0 = std::numeric_limits<double>::infinity();
  }
  if (!c.hypotheses_ok()) return c;
  if (std::abs(c.tau0 - 2.0) <= 1e-12) {
    c.inconclusive = true;
    c.reasons.push_back("tau0 within 1e-12 of 2: inconclusive");
    return c;
  }
  if (c.tau0 < 2.0) {
    c.t0 = time_map_inverse(c.tau0, kappa);
    c.certifies_blowup = true;
  } else {
    c.reasons.push_back("tau0 >= 2: blow-up time not finite under the estimate");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Reduced ODEs

struct ScalarOdeResult {
  std::vector<double> t;   // independent variable (t, or tau for the G equation)
  std::vector<double> F;
  std::vector<double> dF;
  std::optional<double> blowup_time;              // in t
  std::optional<std::pair<double, double>> bracket;  // in t
  bool derivative_positive = true;                // F' > 0 at every accepted step
};

namespace detail {

using Pair = std::array<double, 2>;

/// Integrates y'' = rhs(x, y, y') from x0 until y exceeds `threshold`, the
/// step size collapses, or x reaches x_max.  The crossing is located by
/// bisection on the dense output of the last step.
template <class Rhs>
ScalarOdeResult integrate_until_blowup(Rhs rhs, double x0, Pair y0, double x_max,
                                       double threshold) {
  namespace odeint = boost::numeric::odeint;
  auto sys = [&](const Pair& y, Pair& dy, double x) {
    dy[0] = y[1];
    dy[1] = rhs(x, y[0], y[1]);
  };
  auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<Pair>());
  stepper.initialize(y0, x0, 1e-4);
  ScalarOdeResult res;
  res.t.push_back(x0);
  res.F.push_back(y0[0]);
  res.dF.push_back(y0[1]);
  while (stepper.current_time() < x_max) {
    const double x_prev = stepper.current_time();
    const Pair y_prev = stepper.current_state();
    stepper.do_step(sys);
    double x = stepper.current_time();
    Pair y = stepper.current_state();
    const bool collapsed = stepper.current_time_step() < 1e-14 * std::max(1.0, std::abs(x));
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || y[0] > threshold || collapsed) {
      double lo = x_prev, hi = x;
      if (std::isfinite(y[0]) && y[0] > threshold) {
        Pair mid_state;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          stepper.calc_state(mid, mid_state);
          (mid_state[0] > threshold ? hi : lo) = mid;
        }
        stepper.calc_state(hi, y);
        x = hi;
      } else {
        x = x_prev;
        y = y_prev;
      }
      res.t.push_back(x);
      res.F.push_back(y[0]);
      res.dF.push_back(y[1]);
      // Past the threshold F ~ c/(T - x), so T - x ~ (1+F)/F'.
      const double rest = y[1] > 0.0 ? (1.0 + y[0]) / y[1] : 0.0;
      res.blowup_time = x + rest;
      res.bracket = std::make_pair(x, x + 2.0 * rest);
      return res;
    }
    if (x > x_max) {
      stepper.calc_state(x_max, y);
      x = x_max;
    }
    res.t.push_back(x);
    res.F.push_back(y[0]);
    res.dF.push_back(y[1]);
    if (!(y[1] > 0.0)) res.derivative_positive = false;
  }
  return res;
}

}  // namespace detail

/// F'' + 2 kappa F' = e^{-kappa t} a0 (1+F)^3, F(0) = f0, F'(0) = g0.
inline ScalarOdeResult integrate_F_ode(double a0, double f0, double g0, double kappa,
                                       double blowup_threshold = 1e6, double t_max = 100.0) {
  require_kappa(kappa);
  if (!(blowup_threshold >= 1e6)) throw DomainError("blowup_threshold must be at least 1e6");
  auto rhs = [=](double t, double F, double dF) {
    const double w = 1.0 + F;
    return -2.0 * kappa * dF + std::exp(-kappa * t) * a0 * w * w * w;
  };
  return detail::integrate_until_blowup(rhs, 0.0, {f0, g0}, t_max, blowup_threshold);
}

/// The same problem in tau = 2 - e^{-2 kappa t}:
///   G'' = a0 / (4 kappa^2) (2 - tau)^{-3/2} (1+G)^3, G(1) = f0, G'(1) = g0 / (2 kappa).
/// Times in the result are tau; blowup_time and bracket are mapped back to t.
inline ScalarOdeResult integrate_G_ode(double a0, double f0, double g0, double kappa,
                                       double blowup_threshold = 1e6, double t_max = 100.0) {
  require_kappa(kappa);
  const double c = a0 / (4.0 * kappa * kappa);
  auto rhs = [=](double tau, double G, double) {
    const double w = 1.0 + G;
    return c * std::pow(2.0 - tau, -1.5) * w * w * w;
  };
  const double tau_max = time_map(t_max, kappa);
  ScalarOdeResult r = detail::integrate_until_blowup(rhs, 1.0, {f0, g0 / (2.0 * kappa)}, tau_max,
                                                     blowup_threshold);
  if (r.blowup_time) {
    const double cap = std::nextafter(2.0, 1.0);
    r.blowup_time = time_map_inverse(std::min(*r.blowup_time, cap), kappa);
    r.bracket = std::make_pair(time_map_inverse(std::min(r.bracket->first, cap), kappa),
                               time_map_inverse(std::min(r.bracket->second, cap), kappa));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Jensen step and PDE blow-up

struct JensenGap {
  double lhs = 0.0;  // mean of a (1+u)^3
  double rhs = 0.0;  // a0 (1 + u_0)^3
  bool holds(double tol = 1e-10) const { return lhs >= rhs - tol; }
};

inline JensenGap jensen_gap(const SpectralField& u, const SourceSpec& a, double t, double a0) {
  const double lo = 1.0 + grid_min(u);
  if (lo < 0.0) throw DomainError("Jensen step needs 1 + u >= 0");
  JensenGap j;
  j.lhs = eval_cubic_source(a, t, u).mean();
  const double w = 1.0 + u.mean();
  j.rhs = a0 * w * w * w;
  return j;
}

struct PdeBlowup {
  std::optional<double> blowup_time;
  std::vector<std::pair<double, double>> norm_history;  // (t, ||u||_{H^{m+1}})
  bool mean_lower_bound_holds = true;                    // ||u||_{H^{m+1}} >= |u_0|
};

inline PdeBlowup detect_pde_blowup(const Trajectory& tr, double m,
                                   double threshold = 1e8) {
  PdeBlowup out;
  for (const auto& s : tr.states) {
    const double nrm = sobolev_norm(s.u, m + 1.0);
    out.norm_history.emplace_back(s.time, nrm);
    if (nrm < std::abs(s.u.mean()) * (1.0 - 1e-15)) out.mean_lower_bound_holds = false;
    if (!out.blowup_time && (!std::isfinite(nrm) || nrm > threshold)) out.blowup_time = s.time;
  }
  if (!out.blowup_time && tr.blowup_suspected) out.blowup_time = tr.blowup_time;
  return out;
}

}  // namespace nordstrom
