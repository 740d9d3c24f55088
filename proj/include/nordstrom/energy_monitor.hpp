#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/nonlinear.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/wave_state.hpp"

namespace nordstrom {

/// V = (u_t,h + kappa u_h, d1 u_h, d2 u_h, d3 u_h)
inline std::array<SpectralField, 4> assemble_V(const WaveState& state) {
  const double kappa = state.grid().kappa;
  const SpectralField uh = homogeneous_part(state.u);
  SpectralField v1 = homogeneous_part(state.u_t);
  v1.axpy(kappa, uh);
  auto grad = gradient(uh);
  return {std::move(v1), std::move(grad[0]), std::move(grad[1]), std::move(grad[2])};
}

/// E = <V, V>_m
inline double energy(const WaveState& state, double m) {
  const auto V = assemble_V(state);
  double acc = 0.0;
  for (const auto& c : V) acc += sobolev_norm_squared(c, m);
  return acc;
}

/// Samples (t_i, y_i) of a scalar function of time.
struct Series {
  std::vector<double> t;
  std::vector<double> y;

  std::size_t size() const { return t.size(); }
  double max_gap() const {
    double g = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) g = std::max(g, t[i] - t[i - 1]);
    return g;
  }
  double at(double s) const {
    if (t.empty()) throw DomainError("empty series");
    if (s <= t.front()) return y.front();
    if (s >= t.back()) return y.back();
    const std::size_t i = std::size_t(std::upper_bound(t.begin(), t.end(), s) - t.begin()) - 1;
    const double w = (s - t[i]) / (t[i + 1] - t[i]);
    return y[i] + w * (y[i + 1] - y[i]);
  }
};

/// Samples farther apart than this make the Gronwall quadrature unreliable.
inline constexpr double gronwall_panel = 0.25;

/// Right-hand side of the Gronwall estimate for sqrt(E), squared:
///   ( e^{-k(t-t0)} sqrt(E0) + k^2 int e^{-k(t-s)} ||u_h|| + int e^{-k(t-s)} e^{-ks} ||a(1+u)^3|| )^2
/// The integrals use the trapezoid rule on the union of sample times.
inline double gronwall_bound(double E_t0, const Series& uh_norm, const Series& source_norm,
                             double t0, double t, double kappa) {
  if (t < t0) throw DomainError("gronwall_bound needs t >= t0");
  auto covers = [&](const Series& s) {
    return s.size() > 0 && s.t.front() <= t0 + 1e-12 && s.t.back() >= t - 1e-12;
  };
  if (t > t0 && (!covers(uh_norm) || !covers(source_norm))) {
    throw DomainError("samples do not cover [t0, t]");
  }
  std::vector<double> nodes{t0, t};
  for (const Series* s : {&uh_norm, &source_norm}) {
    for (double x : s->t) {
      if (x > t0 && x < t) nodes.push_back(x);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto integrand = [&](double s) {
    return std::exp(-kappa * (t - s)) *
           (kappa * kappa * uh_norm.at(s) + std::exp(-kappa * s) * source_norm.at(s));
  };
  double integral = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    integral += 0.5 * (nodes[i] - nodes[i - 1]) * (integrand(nodes[i]) + integrand(nodes[i - 1]));
  }
  const double root = std::exp(-kappa * (t - t0)) * std::sqrt(std::max(E_t0, 0.0)) + integral;
  return root * root;
}

struct GronwallLemmaCheck {
  bool hypothesis_holds = false;   // (1/2)(g^2)' <= A g^2 + f g at every interior sample
  bool conclusion_holds = false;   // integral bound at every sample
  double worst_conclusion_gap = 0.0;
  bool passed() const { return !hypothesis_holds || conclusion_holds; }
};

/// Numerical check of the Gronwall lemma on sampled g, A, f.
inline GronwallLemmaCheck gronwall_lemma_check(const Series& g, const Series& A, const Series& f,
                                               double tol = 1e-6) {
  const std::size_t n = g.size();
  if (n < 3 || A.size() != n || f.size() != n) {
    throw DimensionError("gronwall_lemma_check needs three aligned series of length >= 3");
  }
  GronwallLemmaCheck out;
  out.hypothesis_holds = true;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = g.t[i] - g.t[i - 1];
    const double h2 = g.t[i + 1] - g.t[i];
    // Three-point derivative on a possibly non-uniform grid.
    const double dg = -h2 / (h1 * (h1 + h2)) * g.y[i - 1] + (h2 - h1) / (h1 * h2) * g.y[i] +
                      h1 / (h2 * (h1 + h2)) * g.y[i + 1];
    const double lhs = g.y[i] * dg;
    const double rhs = A.y[i] * g.y[i] * g.y[i] + f.y[i] * g.y[i];
    const double scale = std::abs(lhs) + std::abs(rhs) + 1e-300;
    if (lhs > rhs + 1e-4 * scale) {
      out.hypothesis_holds = false;
      break;
    }
  }
  // Bound(t) = e^{int A} g(t0) + int e^{int_tau^t A} f(tau) dtau, in cumulative form:
  // P(t) = int_{t0}^t A, Bound = e^{P(t)} (g0 + int e^{-P(tau)} f(tau) dtau).
  out.conclusion_holds = true;
  double P = 0.0, J = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double h = g.t[i] - g.t[i - 1];
      const double P_prev = P;
      P += 0.5 * h * (A.y[i] + A.y[i - 1]);
      J += 0.5 * h * (std::exp(-P) * f.y[i] + std::exp(-P_prev) * f.y[i - 1]);
    }
    const double bound = std::exp(P) * (g.y.front() + J);
    const double gap = g.y[i] - bound;
    out.worst_conclusion_gap = std::max(out.worst_conclusion_gap, gap);
    if (gap > tol * (std::abs(bound) + std::abs(g.y[i])) + 1e-14) out.conclusion_holds = false;
  }
  return out;
}

/// Proof parameters for the decay estimate; the defaults are conventions.
struct DecayConventions {
  double beta = 0.0;  // 0 selects (1 + 1/kappa) / 2
  double eps1 = 0.0;  // 0 selects min(beta - 1, 8 / (beta + 4)) / 2
};

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> gronwall_bound;
  std::vector<double> uh_norm;     // ||u_h||_{H^{m+1}}
  std::vector<double> mean_track;  // u_0(t)
  std::vector<std::pair<double, double>> metric_ratio;  // [min (1+u)^2, max (1+u)^2]

  double mu = 0.0;                // tail max of ||u_h||_{H^{m+1}} over the last quarter
  double mean_tail = 0.0;         // tail max of |u_0|
  double alpha = 0.0, beta = 0.0, eps1 = 0.0, epsilon_tilde = 0.0;
  bool metric_within = false;     // metric interval at t_end inside [(1-e~)^2, (1+e~)^2]
  bool gronwall_holds = false;    // E <= bound within 1e-6 relative
  bool energy_monotone = false;
  std::vector<std::string> warnings;
};

/// Extremes of (1+u) on the collocation grid.
inline std::pair<double, double> one_plus_u_range(const SpectralField& u) {
  const auto v = inverse_transform(u);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {1.0 + *lo, 1.0 + *hi};
}

inline std::pair<double, double> metric_interval(const SpectralField& u) {
  const auto [lo, hi] = one_plus_u_range(u);
  const double a = lo * lo, b = hi * hi;
  if (lo <= 0.0 && hi >= 0.0) return {0.0, std::max(a, b)};
  return {std::min(a, b), std::max(a, b)};
}

/// E(t) <= E(0) (1 + 1e-8) at every sample.
inline bool monotone_energy_check(const Trajectory& tr, double m) {
  if (tr.empty()) return true;
  const double E0 = energy(tr.front(), m);
  for (const auto& s : tr.states) {
    const double E = energy(s, m);
    if (!(E <= E0 * (1.0 + 1e-8) + 1e-300)) return false;
  }
  return true;
}

/// Energy samples and their Gronwall bounds from t0 = 0 along a trajectory.
inline void energy_and_bound(const Trajectory& tr, double m, const SourceSpec& a,
                             EnergyReport& rep) {
  const double kappa = tr.grid().kappa;
  Series uh, src;
  for (const auto& s : tr.states) {
    rep.times.push_back(s.time);
    rep.energy.push_back(energy(s, m));
    uh.t.push_back(s.time);
    uh.y.push_back(homogeneous_norm(s.u, m));
    src.t.push_back(s.time);
    src.y.push_back(a.is_zero() ? 0.0 : sobolev_norm(eval_cubic_source(a, s.time, s.u), m));
  }
  if (uh.max_gap() > gronwall_panel) {
    rep.warnings.push_back("sample gap exceeds the Gronwall quadrature panel");
  }
  // Cumulative evaluation of the bound.
  const double root0 = std::sqrt(rep.energy.front());
  double integral = 0.0;
  rep.gronwall_bound.push_back(rep.energy.front());
  rep.gronwall_holds = true;
  for (std::size_t i = 1; i < uh.size(); ++i) {
    const double h = uh.t[i] - uh.t[i - 1];
    const double e = std::exp(-kappa * h);
    const double prev = kappa * kappa * uh.y[i - 1] + std::exp(-kappa * uh.t[i - 1]) * src.y[i - 1];
    const double cur = kappa * kappa * uh.y[i] + std::exp(-kappa * uh.t[i]) * src.y[i];
    integral = e * integral + 0.5 * h * (e * prev + cur);
    const double root = std::exp(-kappa * uh.t[i]) * root0 + integral;
    rep.gronwall_bound.push_back(root * root);
  }
  for (std::size_t i = 0; i < rep.energy.size(); ++i) {
    if (rep.energy[i] > rep.gronwall_bound[i] * (1.0 + 1e-6) + 1e-300) rep.gronwall_holds = false;
  }
}

inline EnergyReport decay_diagnostics(const Trajectory& tr, double m, const SourceSpec& a,
                                      DecayConventions conv = {}) {
  if (tr.size() < 2) throw DomainError("trajectory has fewer than two samples");
  const double kappa = tr.grid().kappa;
  if (tr.back().time < 10.0 / kappa * (1.0 - 1e-12)) {
    throw DomainError("decay diagnostics need t_end >= 10/kappa");
  }
  EnergyReport rep;
  energy_and_bound(tr, m, a, rep);
  for (const auto& s : tr.states) {
    rep.uh_norm.push_back(homogeneous_norm(s.u, m + 1.0));
    rep.mean_track.push_back(s.u.mean());
    rep.metric_ratio.push_back(metric_interval(s.u));
  }
  const double t_end = tr.back().time;
  const double tail = t_end - 0.25 * (t_end - tr.front().time);
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    if (rep.times[i] + 1e-12 < tail) continue;
    rep.mu = std::max(rep.mu, rep.uh_norm[i]);
    rep.mean_tail = std::max(rep.mean_tail, std::abs(rep.mean_track[i]));
  }
  rep.alpha = std::sqrt(rep.energy.front());
  rep.beta = conv.beta > 0.0 ? conv.beta : 0.5 * (1.0 + 1.0 / kappa);
  rep.eps1 = conv.eps1 > 0.0 ? conv.eps1
                             : 0.5 * std::min(rep.beta - 1.0, 8.0 / (rep.beta + 4.0));
  rep.epsilon_tilde = rep.alpha * rep.beta * rep.eps1 / 3.0;
  const auto [lo, hi] = rep.metric_ratio.back();
  const double e = rep.epsilon_tilde;
  const double slack = 1e-12;
  rep.metric_within = lo >= (1.0 - e) * (1.0 - e) - slack && hi <= (1.0 + e) * (1.0 + e) + slack;
  const double E0 = rep.energy.front();
  rep.energy_monotone = std::all_of(rep.energy.begin(), rep.energy.end(),
                                    [&](double E) { return E <= E0 * (1.0 + 1e-8) + 1e-300; });
  return rep;
}

/// Least-squares decay rate r of y ~ C e^{-r t} over samples in [t_lo, t_hi].
inline double fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& y,
                                 double t_lo, double t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi || !(y[i] > 0.0)) continue;
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    ++cnt;
  }
  if (cnt < 2) throw DomainError("not enough samples in the fit window");
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return -slope;
}

}  // namespace nordstrom
