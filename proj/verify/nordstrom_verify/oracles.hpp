#pragma once

// Independent reference computations.  None of these call the solver code
// under test: ODEs go through odeint steppers the library does not use, and
// transforms are evaluated as direct sums.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "nordstrom/spectral_field.hpp"

namespace oracle {

namespace odeint = boost::numeric::odeint;
using cplx = std::complex<double>;

/// u'' + 2 kappa u' + |k|^2 u = e^{-kappa t} F(t) for one complex mode,
/// integrated with an adaptive Runge-Kutta-Fehlberg 7(8) pair.
inline cplx mode_ode(double norm2, double kappa, cplx f, cplx g,
                     const std::function<cplx(double)>& F, double t, double tol = 1e-14) {
  using State = std::array<double, 4>;  // re u, im u, re u', im u'
  State y{f.real(), f.imag(), g.real(), g.imag()};
  if (t == 0.0) return f;
  auto rhs = [&](const State& s, State& d, double tau) {
    const cplx forcing = F ? std::exp(-kappa * tau) * F(tau) : cplx{};
    d[0] = s[2];
    d[1] = s[3];
    d[2] = -2.0 * kappa * s[2] - norm2 * s[0] + forcing.real();
    d[3] = -2.0 * kappa * s[3] - norm2 * s[1] + forcing.imag();
  };
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_adaptive(stepper, rhs, y, 0.0, t, 1e-3);
  return {y[0], y[1]};
}

/// Spatially constant reduction F'' + 2 kappa F' = e^{-kappa t} a0 (1+F)^3,
/// sampled at the requested (increasing) times with a Bulirsch-Stoer stepper.
inline std::vector<double> homogeneous_ode(double a0, double f0, double g0, double kappa,
                                           const std::vector<double>& times, double tol = 1e-13) {
  using State = std::array<double, 2>;
  State y{f0, g0};
  auto rhs = [&](const State& s, State& d, double tau) {
    const double w = 1.0 + s[0];
    d[0] = s[1];
    d[1] = -2.0 * kappa * s[1] + std::exp(-kappa * tau) * a0 * w * w * w;
  };
  std::vector<double> out;
  double t = 0.0;
  odeint::bulirsch_stoer<State> bs(tol, tol);
  for (double target : times) {
    if (target > t) {
      odeint::integrate_adaptive(bs, rhs, y, t, target, 1e-4);
      t = target;
    }
    out.push_back(y[0]);
  }
  return out;
}

/// phi'' = e^{-3 kappa t} a0 phi^3 + kappa^2 phi, sampled at the requested times.
inline std::vector<double> phi_ode(double a0, double phi0, double dphi0, double kappa,
                                   const std::vector<double>& times, double tol = 1e-13) {
  using State = std::array<double, 2>;
  State y{phi0, dphi0};
  auto rhs = [&](const State& s, State& d, double tau) {
    d[0] = s[1];
    d[1] = std::exp(-3.0 * kappa * tau) * a0 * s[0] * s[0] * s[0] + kappa * kappa * s[0];
  };
  std::vector<double> out;
  double t = 0.0;
  odeint::bulirsch_stoer<State> bs(tol, tol);
  for (double target : times) {
    if (target > t) {
      odeint::integrate_adaptive(bs, rhs, y, t, target, 1e-4);
      t = target;
    }
    out.push_back(y[0]);
  }
  return out;
}

/// Direct DFT coefficient (1/N) sum_x v(x) e^{-i k.x} of grid samples.
inline cplx dft_coefficient(int n, const std::vector<double>& v, const nordstrom::Wavevector& k) {
  const double h = 2.0 * M_PI / n;
  cplx acc{};
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      for (int i3 = 0; i3 < n; ++i3) {
        const double phase = h * (k.k1 * i1 + k.k2 * i2 + k.k3 * i3);
        acc += v[(std::size_t(i1) * n + i2) * n + i3] * std::polar(1.0, -phase);
      }
    }
  }
  return acc / double(std::size_t(n) * n * n);
}

/// Sum over modes of c_k e^{i k.x} at one point.
inline double synthesize(const std::vector<std::pair<nordstrom::Wavevector, cplx>>& modes,
                         const std::array<double, 3>& x) {
  cplx acc{};
  for (const auto& [k, c] : modes) acc += c * std::polar(1.0, k.k1 * x[0] + k.k2 * x[1] + k.k3 * x[2]);
  return acc.real();
}

/// Undamped free wave with phi(0) = p, phi_t(0) = q, mode by mode.
inline nordstrom::SpectralField free_wave(const nordstrom::SpectralField& p,
                                          const nordstrom::SpectralField& q, double t) {
  nordstrom::SpectralField out(p.grid());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto k = p.grid().wavevector(s);
    const double w = std::sqrt(double(k.norm2()));
    out.coeffs()[s] = w == 0.0 ? p.coeffs()[s] + t * q.coeffs()[s]
                               : p.coeffs()[s] * std::cos(w * t) + q.coeffs()[s] * std::sin(w * t) / w;
  }
  return out;
}

/// Random real field with |k_i| <= band, built from conjugate pairs.
inline nordstrom::SpectralField random_field(const nordstrom::GridSpec& g, int band, double amp,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<nordstrom::Mode> modes;
  for (int a = -band; a <= band; ++a) {
    for (int b = -band; b <= band; ++b) {
      for (int c = 0; c <= band; ++c) {
        const nordstrom::Wavevector k{a, b, c};
        if (c == 0 && (b < 0 || (b == 0 && a < 0))) continue;
        const double scale = amp / (1.0 + double(k.norm2()));
        const cplx v = k.is_zero() ? cplx(scale * N(rng), 0.0) : scale * cplx(N(rng), N(rng));
        modes.push_back({k, v});
      }
    }
  }
  return nordstrom::SpectralField::from_modes(g, modes);
}

}  // namespace oracle
