#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/quadrature.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/wave_state.hpp"

namespace nordstrom {

inline constexpr int duhamel_nodes = 8;

inline void require_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw UnsupportedParameterError("kappa must lie in (0,1)");
  }
}

/// omega_k = sqrt(|k|^2 - kappa^2)
inline double mode_frequency(long norm2, double kappa) {
  return std::sqrt(double(norm2) - kappa * kappa);
}

/// Widest Duhamel panel that still resolves sin(omega (t - tau)).
inline double panel_width(double omega) {
  return omega > 0.0 ? std::min(0.25, std::numbers::pi / (4.0 * omega)) : 0.25;
}

/// F_k(t) for one mode (without the exp(-kappa t) factor).
struct ModeForcing {
  Wavevector k;
  std::function<complex(double)> value;

  static ModeForcing none(Wavevector k = {}) { return {k, {}}; }

  /// Piecewise cubic Lagrange interpolation of samples starting at t = 0.
  static ModeForcing from_samples(Wavevector k, std::vector<double> times,
                                  std::vector<complex> values) {
    if (times.size() != values.size() || times.empty()) {
      throw DimensionError("forcing samples and times differ in length");
    }
    if (times.front() != 0.0) throw DomainError("forcing samples must start at t = 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw DomainError("forcing sample times must increase");
    }
    auto eval = [t = std::move(times), v = std::move(values)](double x) -> complex {
      if (t.size() == 1) return v[0];
      auto it = std::upper_bound(t.begin(), t.end(), x);
      std::size_t i = it == t.begin() ? 0 : std::size_t(it - t.begin()) - 1;
      const std::size_t width = std::min<std::size_t>(4, t.size());
      std::size_t lo = i >= 1 ? i - 1 : 0;
      lo = std::min(lo, t.size() - width);
      complex acc{};
      for (std::size_t a = lo; a < lo + width; ++a) {
        double l = 1.0;
        for (std::size_t b = lo; b < lo + width; ++b) {
          if (b != a) l *= (x - t[b]) / (t[a] - t[b]);
        }
        acc += l * v[a];
      }
      return acc;
    };
    return {k, eval};
  }

  bool active() const { return static_cast<bool>(value); }
};

struct ModeValue {
  complex u;
  complex u_t;
};

/// Mode k != 0 of the linear problem and its time derivative.
inline ModeValue solve_mode_nonzero_state(const Wavevector& k, complex f, complex g,
                                          const ModeForcing& forcing, double t, double kappa) {
  require_kappa(kappa);
  if (k.is_zero()) throw DomainError("solve_mode_nonzero needs k != 0");
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  const double w = mode_frequency(k.norm2(), kappa);
  complex duh_sin{}, duh_cos{};
  if (forcing.active() && t > 0.0) {
    const int panels = std::max(1, int(std::ceil(t / panel_width(w) - 1e-12)));
    const double h = t / panels;
    const Rule& rule = gauss_legendre(duhamel_nodes);
    for (int p = 0; p < panels; ++p) {
      for (const auto& nd : map_rule(rule, p * h, (p + 1) * h)) {
        const complex F = forcing.value(nd.t);
        duh_sin += nd.w * std::sin(w * (t - nd.t)) * F;
        duh_cos += nd.w * std::cos(w * (t - nd.t)) * F;
      }
    }
  }
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  const double decay = std::exp(-kappa * t);
  const complex b = g + kappa * f;
  const complex bracket = f * c + b * s / w + duh_sin / w;
  const complex u = decay * bracket;
  const complex u_t = -kappa * u + decay * (-f * w * s + b * c + duh_cos);
  return {u, u_t};
}

inline complex solve_mode_nonzero(const Wavevector& k, complex f, complex g,
                                  const ModeForcing& forcing, double t, double kappa) {
  return solve_mode_nonzero_state(k, f, g, forcing, t, kappa).u;
}

/// Zero mode: u0 and u0'.
inline std::pair<double, double> solve_mode_zero_state(double f0, double g0,
                                                       const ModeForcing& forcing, double t,
                                                       double kappa) {
  require_kappa(kappa);
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  double lag = 0.0, rate = 0.0;  // integrals of (1 - e^{-2k(t-s)}) e^{-ks} F and e^{-2k(t-s)} e^{-ks} F
  if (forcing.active() && t > 0.0) {
    const int panels = std::max(1, int(std::ceil(t / 0.25 - 1e-12)));
    const double h = t / panels;
    const Rule& rule = gauss_legendre(duhamel_nodes);
    for (int p = 0; p < panels; ++p) {
      for (const auto& nd : map_rule(rule, p * h, (p + 1) * h)) {
        const double F = forcing.value(nd.t).real();
        const double damp = std::exp(-2.0 * kappa * (t - nd.t));
        const double e = std::exp(-kappa * nd.t) * F;
        lag += nd.w * (-std::expm1(-2.0 * kappa * (t - nd.t))) * e;
        rate += nd.w * damp * e;
      }
    }
  }
  const double grow = -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
  const double u0 = f0 + g0 * grow + lag / (2.0 * kappa);
  const double u0_t = g0 * std::exp(-2.0 * kappa * t) + rate;
  return {u0, u0_t};
}

inline double solve_mode_zero(double f0, double g0, const ModeForcing& forcing, double t,
                              double kappa) {
  return solve_mode_zero_state(f0, g0, forcing, t, kappa).first;
}

/// F(t, .) as a field: a(1+v)^3 without the exp(-kappa t) factor.
using Forcing = std::function<SpectralField(double)>;

/// Exact solution of u_tt + 2 kappa u_t - Lap u = e^{-kappa t} F on
/// n_samples uniform times in [0, t_end].  The Duhamel integrals are carried
/// as running moments int cos(w s) F, int sin(w s) F (and e^{-+kappa s} F for
/// k = 0) accumulated with Gauss-Legendre panels aligned to the samples.
inline Trajectory solve_linear(const WaveState& initial, const Forcing& forcing, double t_end,
                               int n_samples) {
  const GridSpec& grid = initial.grid();
  const double kappa = grid.kappa;
  require_kappa(kappa);
  if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
  if (n_samples < 2) throw DomainError("solve_linear needs at least two samples");

  const Lattice& lat = lattice(grid.n_per_dim);
  const std::size_t slots = grid.points();

  // Distinct |k|^2 values share their trigonometric factors.
  std::map<long, int> distinct;
  for (long q : lat.norm2) distinct.emplace(q, 0);
  std::vector<double> omega;
  for (auto& [q, idx] : distinct) {
    idx = int(omega.size());
    omega.push_back(q == 0 ? 0.0 : mode_frequency(q, kappa));
  }
  std::vector<int> group(slots);
  for (std::size_t s = 0; s < slots; ++s) group[s] = distinct[lat.norm2[s]];
  const double w_max = omega.back();
  std::vector<double> cs(omega.size()), sn(omega.size());

  const auto& f = initial.u.coeffs();
  const auto& g = initial.u_t.coeffs();
  std::vector<complex> mc(slots), ms(slots);  // running cosine / sine moments
  complex m_minus{}, m_plus{};                // int e^{-kappa s} F0, int e^{kappa s} F0

  auto assemble = [&](double t) {
    WaveState st{t, SpectralField(grid), SpectralField(grid)};
    auto& u = st.u.coeffs();
    auto& ut = st.u_t.coeffs();
    for (std::size_t d = 1; d < omega.size(); ++d) {
      cs[d] = std::cos(omega[d] * t);
      sn[d] = std::sin(omega[d] * t);
    }
    const double decay = std::exp(-kappa * t);
    for (std::size_t s = 1; s < slots; ++s) {
      const int d = group[s];
      const double w = omega[d];
      const complex b = g[s] + kappa * f[s];
      const complex duh_sin = sn[d] * mc[s] - cs[d] * ms[s];
      const complex duh_cos = cs[d] * mc[s] + sn[d] * ms[s];
      u[s] = decay * (f[s] * cs[d] + (b * sn[d] + duh_sin) / w);
      ut[s] = -kappa * u[s] + decay * (-f[s] * w * sn[d] + b * cs[d] + duh_cos);
    }
    const double e2 = std::exp(-2.0 * kappa * t);
    const double grow = -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
    u[0] = f[0] + g[0] * grow + (m_minus - e2 * m_plus) / (2.0 * kappa);
    ut[0] = g[0] * e2 + e2 * m_plus;
    return st;
  };

  Trajectory traj;
  traj.states.reserve(std::size_t(n_samples));
  traj.states.push_back(assemble(0.0));
  const double dt = t_end / (n_samples - 1);
  const int panels = std::max(1, int(std::ceil(dt / panel_width(w_max) - 1e-12)));
  const Rule& rule = gauss_legendre(duhamel_nodes);
  for (int j = 1; j < n_samples; ++j) {
    const double t0 = (j - 1) * dt;
    if (forcing && dt > 0.0) {
      const double h = dt / panels;
      for (int p = 0; p < panels; ++p) {
        for (const auto& nd : map_rule(rule, t0 + p * h, t0 + (p + 1) * h)) {
          const SpectralField F = forcing(nd.t);
          const auto& Fc = F.coeffs();
          for (std::size_t d = 1; d < omega.size(); ++d) {
            cs[d] = nd.w * std::cos(omega[d] * nd.t);
            sn[d] = nd.w * std::sin(omega[d] * nd.t);
          }
          for (std::size_t s = 1; s < slots; ++s) {
            if (Fc[s] == complex{}) continue;
            mc[s] += cs[group[s]] * Fc[s];
            ms[s] += sn[group[s]] * Fc[s];
          }
          m_minus += nd.w * std::exp(-kappa * nd.t) * Fc[0];
          m_plus += nd.w * std::exp(kappa * nd.t) * Fc[0];
        }
      }
    }
    traj.states.push_back(assemble(j == n_samples - 1 ? t_end : j * dt));
  }
  traj.last_valid_time = t_end;
  return traj;
}

enum class BoundForm { corrected, as_published };

/// Time samples of the forcing norms used by the linear energy estimate.
struct ForcingNormSamples {
  std::vector<double> times;
  std::vector<double> homogeneous;  // ||F(t)||_{dot H^m}
  std::vector<double> mean_abs;     // |F_0(t)|
};

/// Upper bound for ||u(t)||^2_{H^{m+1}} of the linear solution.
///
/// The corrected form replaces the factor 2 of the nonzero-mode group by the
/// number of nonzero terms in the solution formula (Cauchy-Schwarz), and
/// gives the zero-mode group the analogous factor.  The published form keeps
/// the original constants; it fails e.g. for f0 = g0 > 0.
inline double linear_energy_bound(const WaveState& initial, const ForcingNormSamples& forcing,
                                  double t, double m, BoundForm form = BoundForm::corrected) {
  const double kappa = initial.grid().kappa;
  require_kappa(kappa);
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  const double f_h = homogeneous_norm_squared(initial.u, m + 1.0);
  const double g_h = homogeneous_norm_squared(initial.u_t, m);
  const double f0 = initial.u.mean();
  const double g0 = initial.u_t.mean();

  // Samples restricted to [0, t], with the endpoint interpolated linearly.
  std::vector<double> ts, fh2;
  double sup_f0 = 0.0;
  const auto& T = forcing.times;
  if (!T.empty() && t > 0.0 && T.back() < t * (1.0 - 1e-12)) {
    throw DomainError("forcing samples do not cover [0, t]");
  }
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (T[i] > t) {
      if (i > 0) {
        const double s = (t - T[i - 1]) / (T[i] - T[i - 1]);
        const double h2a = forcing.homogeneous[i - 1] * forcing.homogeneous[i - 1];
        const double h2b = forcing.homogeneous[i] * forcing.homogeneous[i];
        ts.push_back(t);
        fh2.push_back(h2a + s * (h2b - h2a));
        sup_f0 = std::max(sup_f0, forcing.mean_abs[i - 1] + s * (forcing.mean_abs[i] -
                                                                   forcing.mean_abs[i - 1]));
      }
      break;
    }
    ts.push_back(T[i]);
    fh2.push_back(forcing.homogeneous[i] * forcing.homogeneous[i]);
    sup_f0 = std::max(sup_f0, forcing.mean_abs[i]);
  }
  const double int_fh2 = trapezoid(ts, fh2, ts.size());
  const bool forced_h = int_fh2 > 0.0;

  const double t2 = 1.0 + t * t;
  const double group_h = (1.0 + 2.0 * kappa * kappa) * t2 * f_h + 2.0 * t2 * g_h +
                         t * t2 * int_fh2;
  const double grow = -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
  const double lag = -std::expm1(-kappa * t) / kappa;
  const double zf = f0 * f0;
  const double zg = g0 * g0 * grow * grow;
  const double zF = 0.25 * sup_f0 * sup_f0 * std::pow(lag, 4);

  double factor_h = 2.0;
  double factor_0 = 1.0;
  if (form == BoundForm::corrected) {
    factor_h = double((f_h > 0.0) + (f_h > 0.0 || g_h > 0.0) + forced_h);
    factor_0 = double((zf > 0.0) + (zg > 0.0) + (zF > 0.0));
  }
  return factor_h * std::exp(-2.0 * kappa * t) * group_h + factor_0 * (zf + zg + zF);
}

}  // namespace nordstrom
