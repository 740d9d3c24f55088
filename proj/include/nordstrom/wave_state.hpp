#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/spectral_field.hpp"

namespace nordstrom {

struct WaveState {
  double time = 0.0;
  SpectralField u;
  SpectralField u_t;

  WaveState() = default;
  WaveState(double t, SpectralField u_, SpectralField ut_)
      : time(t), u(std::move(u_)), u_t(std::move(ut_)) {
    u.check_same(u_t);
  }

  static WaveState zero(const GridSpec& grid) {
    return {0.0, SpectralField(grid), SpectralField(grid)};
  }

  const GridSpec& grid() const { return u.grid(); }
  bool is_finite() const { return u.is_finite() && u_t.is_finite(); }
};

/// Time-ordered solver output.  A run that stops on norm overflow keeps the
/// valid prefix and records where it stopped.
struct Trajectory {
  std::vector<WaveState> states;
  bool blowup_suspected = false;
  double last_valid_time = 0.0;
  std::optional<double> blowup_time;

  bool empty() const { return states.empty(); }
  std::size_t size() const { return states.size(); }
  const WaveState& front() const { return states.front(); }
  const WaveState& back() const { return states.back(); }
  const GridSpec& grid() const { return states.front().grid(); }

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(states.size());
    for (const auto& s : states) t.push_back(s.time);
    return t;
  }

  /// Index i with times[i] <= t <= times[i+1], clamped to the valid range.
  std::size_t bracket(double t) const {
    if (states.size() < 2) throw DomainError("trajectory has fewer than two samples");
    auto it = std::upper_bound(states.begin(), states.end(), t,
                               [](double v, const WaveState& s) { return v < s.time; });
    std::size_t i = it == states.begin() ? 0 : std::size_t(it - states.begin()) - 1;
    return std::min(i, states.size() - 2);
  }

  /// Cubic Hermite interpolation of u from the stored (u, u_t) pairs.
  SpectralField u_at(double t) const {
    if (t < states.front().time - 1e-12 || t > states.back().time + 1e-12) {
      throw DomainError("interpolation time outside the trajectory");
    }
    const std::size_t i = bracket(t);
    const WaveState& a = states[i];
    const WaveState& b = states[i + 1];
    const double h = b.time - a.time;
    const double s = (t - a.time) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    SpectralField out(a.u.grid());
    auto& o = out.coeffs();
    const auto& ua = a.u.coeffs();
    const auto& ub = b.u.coeffs();
    const auto& va = a.u_t.coeffs();
    const auto& vb = b.u_t.coeffs();
    for (std::size_t k = 0; k < o.size(); ++k) {
      o[k] = h00 * ua[k] + h10 * h * va[k] + h01 * ub[k] + h11 * h * vb[k];
    }
    return out;
  }
};

}  // namespace nordstrom
