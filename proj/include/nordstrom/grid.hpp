#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>

#include "nordstrom/errors.hpp"

namespace nordstrom {

using complex = std::complex<double>;
using Point = std::array<double, 3>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Integer wavevector on the lattice Z^3.
struct Wavevector {
  int k1 = 0;
  int k2 = 0;
  int k3 = 0;

  constexpr int operator[](int axis) const { return axis == 0 ? k1 : axis == 1 ? k2 : k3; }
  constexpr long norm2() const {
    return long(k1) * k1 + long(k2) * k2 + long(k3) * k3;
  }
  constexpr bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0; }
  constexpr Wavevector operator-() const { return {-k1, -k2, -k3}; }
  friend constexpr bool operator==(const Wavevector&, const Wavevector&) = default;
};

/// Collocation grid on the torus [0, 2pi)^3 together with the two model
/// parameters every diagnostic needs: the Sobolev order m and kappa.
struct GridSpec {
  int n_per_dim = 16;
  double sobolev_order_m = 3.0;
  double kappa = 0.5;

  GridSpec() = default;
  GridSpec(int n, double m, double kappa_) : n_per_dim(n), sobolev_order_m(m), kappa(kappa_) {
    validate();
  }

  void validate() const {
    if (n_per_dim < 4 || n_per_dim % 2 != 0) {
      throw DimensionError("n_per_dim must be an even integer >= 4, got " +
                           std::to_string(n_per_dim));
    }
    if (!(sobolev_order_m >= 0.0)) {
      throw DomainError("sobolev_order_m must be non-negative");
    }
    if (!(kappa > 0.0 && kappa < 1.0)) {
      throw UnsupportedParameterError("kappa must lie in (0,1), got " + std::to_string(kappa));
    }
  }

  std::size_t points() const { return std::size_t(n_per_dim) * n_per_dim * n_per_dim; }
  double spacing() const { return two_pi / n_per_dim; }
  int nyquist() const { return n_per_dim / 2; }

  /// Flat storage index of wavevector k (periodic wrap, Nyquist shares a slot).
  std::size_t index(const Wavevector& k) const {
    auto wrap = [n = n_per_dim](int v) { return std::size_t(((v % n) + n) % n); };
    return (wrap(k.k1) * n_per_dim + wrap(k.k2)) * n_per_dim + wrap(k.k3);
  }

  /// Signed wavenumber stored in slot i of one axis; the Nyquist slot maps to +n/2.
  int wavenumber(int i) const { return i <= n_per_dim / 2 ? i : i - n_per_dim; }

  Wavevector wavevector(std::size_t flat) const {
    const int n = n_per_dim;
    const int i3 = int(flat % n);
    const int i2 = int((flat / n) % n);
    const int i1 = int(flat / (std::size_t(n) * n));
    return {wavenumber(i1), wavenumber(i2), wavenumber(i3)};
  }

  bool is_nyquist(int k) const { return k == n_per_dim / 2 || k == -n_per_dim / 2; }
  bool has_nyquist(const Wavevector& k) const {
    return is_nyquist(k.k1) || is_nyquist(k.k2) || is_nyquist(k.k3);
  }

  /// Whether k is representable: |k_i| <= n/2 on every axis.
  bool contains(const Wavevector& k) const {
    const int h = n_per_dim / 2;
    return std::abs(k.k1) <= h && std::abs(k.k2) <= h && std::abs(k.k3) <= h;
  }

  Point point(std::size_t flat) const {
    const int n = n_per_dim;
    const double h = spacing();
    return {h * double(flat / (std::size_t(n) * n)), h * double((flat / n) % n),
            h * double(flat % n)};
  }

  bool same_shape(const GridSpec& other) const { return n_per_dim == other.n_per_dim; }
};

/// |k|^(2m) evaluated from the exact integer |k|^2.
inline double lattice_weight(long norm2, double m) {
  if (norm2 == 0) return 0.0;
  if (m == 0.0) return 1.0;
  return std::pow(double(norm2), m);
}

inline double wrap_angle(double x) {
  double r = std::fmod(x, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

}  // namespace nordstrom
