#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/fft.hpp"
#include "nordstrom/grid.hpp"

namespace nordstrom {

/// Per-resolution tables: wavevector, |k|^2 and the slot of -k for every
/// storage slot.  Built once and shared.
struct Lattice {
  int n = 0;
  std::vector<Wavevector> k;
  std::vector<long> norm2;
  std::vector<std::size_t> negated;
};

inline const Lattice& lattice(int n) {
  static std::map<int, Lattice> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GridSpec g;
  g.n_per_dim = n;
  Lattice lat;
  lat.n = n;
  const std::size_t total = g.points();
  lat.k.resize(total);
  lat.norm2.resize(total);
  lat.negated.resize(total);
  for (std::size_t s = 0; s < total; ++s) {
    lat.k[s] = g.wavevector(s);
    lat.norm2[s] = lat.k[s].norm2();
    lat.negated[s] = g.index(-lat.k[s]);
  }
  return cache.emplace(n, std::move(lat)).first->second;
}

/// |k|^(2m) per slot, zero at k = 0.
inline const std::vector<double>& lattice_weights(int n, double m) {
  static std::map<std::pair<int, double>, std::vector<double>> cache;
  static std::mutex mu;
  const Lattice& lat = lattice(n);
  std::lock_guard lock(mu);
  auto key = std::make_pair(n, m);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<double> w(lat.norm2.size());
  for (std::size_t s = 0; s < w.size(); ++s) w[s] = lattice_weight(lat.norm2[s], m);
  return cache.emplace(key, std::move(w)).first->second;
}

struct Mode {
  Wavevector k;
  complex c;
};

/// Truncated Fourier series of a real function on T^3.  Coefficients are
/// stored for every slot of the n^3 lattice; slot n/2 on an axis holds the
/// Nyquist coefficient, which represents the real cosine at that frequency.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const GridSpec& grid) : grid_(grid), c_(grid.points()) {}

  static SpectralField constant(const GridSpec& grid, double value) {
    SpectralField f(grid);
    f.c_[0] = value;
    return f;
  }

  /// Builds a field from modes; missing conjugate partners are filled in,
  /// inconsistent ones are rejected.
  static SpectralField from_modes(const GridSpec& grid, std::span<const Mode> modes,
                                  double tol = 1e-12) {
    SpectralField f(grid);
    std::vector<char> seen(grid.points(), 0);
    for (const Mode& md : modes) {
      if (!grid.contains(md.k)) {
        throw DimensionError("wavevector outside the grid's band");
      }
      const std::size_t s = grid.index(md.k);
      if (seen[s]) {
        throw CorruptFieldError("wavevector listed twice");
      }
      seen[s] = 1;
      f.c_[s] = md.c;
    }
    const Lattice& lat = lattice(grid.n_per_dim);
    for (std::size_t s = 0; s < f.c_.size(); ++s) {
      if (!seen[s]) continue;
      const std::size_t t = lat.negated[s];
      if (seen[t]) {
        if (std::abs(f.c_[s] - std::conj(f.c_[t])) > tol * (1.0 + std::abs(f.c_[s]))) {
          throw CorruptFieldError("coefficient list is not conjugate-symmetric");
        }
      } else {
        f.c_[t] = std::conj(f.c_[s]);
        seen[t] = 1;
      }
    }
    return f;
  }

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n_per_dim; }
  std::size_t size() const { return c_.size(); }
  bool empty() const { return c_.empty(); }

  std::vector<complex>& coeffs() { return c_; }
  const std::vector<complex>& coeffs() const { return c_; }

  complex operator[](const Wavevector& k) const {
    return grid_.contains(k) ? c_[grid_.index(k)] : complex{};
  }

  /// Sets the coefficient of k and its conjugate partner.
  void set_mode(const Wavevector& k, complex value) {
    c_[grid_.index(k)] = value;
    c_[grid_.index(-k)] = std::conj(value);
  }

  double mean() const { return c_.empty() ? 0.0 : c_[0].real(); }

  /// Largest |k_i| carrying a coefficient above tol.
  int bandwidth(double tol = 0.0) const {
    const Lattice& lat = lattice(n());
    int b = 0;
    for (std::size_t s = 0; s < c_.size(); ++s) {
      if (std::abs(c_[s]) > tol) {
        const Wavevector& k = lat.k[s];
        b = std::max({b, std::abs(k.k1), std::abs(k.k2), std::abs(k.k3)});
      }
    }
    return b;
  }

  bool is_finite() const {
    return std::all_of(c_.begin(), c_.end(), [](const complex& z) {
      return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t s = 0; s < c_.size(); ++s) c_[s] += o.c_[s];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t s = 0; s < c_.size(); ++s) c_[s] -= o.c_[s];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& z : c_) z *= a;
    return *this;
  }
  /// this += a * o
  SpectralField& axpy(double a, const SpectralField& o) {
    check_same(o);
    for (std::size_t s = 0; s < c_.size(); ++s) c_[s] += a * o.c_[s];
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

  void check_same(const SpectralField& o) const {
    if (!grid_.same_shape(o.grid_) || c_.size() != o.c_.size()) {
      throw DimensionError("fields live on different grids");
    }
  }

 private:
  GridSpec grid_;
  std::vector<complex> c_;
};

/// Largest violation of c_{-k} = conj(c_k).
inline double symmetry_defect(const SpectralField& f) {
  const Lattice& lat = lattice(f.n());
  const auto& c = f.coeffs();
  double worst = 0.0;
  for (std::size_t s = 0; s < c.size(); ++s) {
    worst = std::max(worst, std::abs(c[s] - std::conj(c[lat.negated[s]])));
  }
  return worst;
}

inline void symmetrize(SpectralField& f) {
  const Lattice& lat = lattice(f.n());
  auto& c = f.coeffs();
  for (std::size_t s = 0; s < c.size(); ++s) {
    const std::size_t t = lat.negated[s];
    if (t < s) continue;
    const complex avg = 0.5 * (c[s] + std::conj(c[t]));
    c[s] = avg;
    c[t] = std::conj(avg);
  }
}

namespace detail {

inline std::vector<complex>& half_buffer(std::size_t size) {
  thread_local std::vector<complex> buf;
  buf.resize(size);
  return buf;
}

/// Expands an n^3 half spectrum (unnormalized) into full storage.
inline void unpack_half(int n, const complex* half, double scale, complex* full) {
  const int h = n / 2 + 1;
  for (int i1 = 0; i1 < n; ++i1) {
    const int j1 = (n - i1) % n;
    for (int i2 = 0; i2 < n; ++i2) {
      const int j2 = (n - i2) % n;
      complex* row = full + (std::size_t(i1) * n + i2) * n;
      const complex* src = half + (std::size_t(i1) * n + i2) * h;
      const complex* mirror = half + (std::size_t(j1) * n + j2) * h;
      for (int i3 = 0; i3 < h; ++i3) row[i3] = scale * src[i3];
      for (int i3 = h; i3 < n; ++i3) row[i3] = scale * std::conj(mirror[n - i3]);
    }
  }
}

}  // namespace detail

/// Fourier coefficients u_k = N^{-1} sum_j u(x_j) exp(-i k.x_j) of grid samples.
inline SpectralField forward_transform(const GridSpec& grid, std::span<const double> values) {
  if (values.size() != grid.points()) {
    throw DimensionError("grid array has " + std::to_string(values.size()) +
                         " entries, expected " + std::to_string(grid.points()));
  }
  const int n = grid.n_per_dim;
  auto& half = detail::half_buffer(fft::half_size(n));
  fft::r2c(n, values.data(), half.data());
  SpectralField f(grid);
  detail::unpack_half(n, half.data(), 1.0 / double(grid.points()), f.coeffs().data());
  return f;
}

/// Grid samples of the trigonometric polynomial.  Asymmetry above 1e-10
/// means the field is not real and is reported as corruption.
inline std::vector<double> inverse_transform(const SpectralField& field) {
  double magnitude = 1.0;
  for (const auto& z : field.coeffs()) magnitude = std::max(magnitude, std::abs(z));
  if (symmetry_defect(field) > 1e-10 * magnitude) {
    throw CorruptFieldError("coefficients violate conjugate symmetry");
  }
  const int n = field.n();
  const int h = n / 2 + 1;
  auto& half = detail::half_buffer(fft::half_size(n));
  const Lattice& lat = lattice(n);
  const auto& c = field.coeffs();
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      for (int i3 = 0; i3 < h; ++i3) {
        const std::size_t s = (std::size_t(i1) * n + i2) * n + i3;
        half[(std::size_t(i1) * n + i2) * h + i3] =
            0.5 * (c[s] + std::conj(c[lat.negated[s]]));
      }
    }
  }
  std::vector<double> out(field.grid().points());
  fft::c2r(n, half.data(), out.data());
  return out;
}

inline double sobolev_norm_squared(const SpectralField& f, double m) {
  if (!(m >= 0.0)) throw DomainError("Sobolev order must be non-negative");
  const auto& w = lattice_weights(f.n(), m);
  const auto& c = f.coeffs();
  double acc = std::norm(c[0]);
  for (std::size_t s = 1; s < c.size(); ++s) acc += w[s] * std::norm(c[s]);
  return acc;
}

inline double homogeneous_norm_squared(const SpectralField& f, double m) {
  if (!(m >= 0.0)) throw DomainError("Sobolev order must be non-negative");
  const auto& w = lattice_weights(f.n(), m);
  const auto& c = f.coeffs();
  double acc = 0.0;
  for (std::size_t s = 1; s < c.size(); ++s) acc += w[s] * std::norm(c[s]);
  return acc;
}

/// sqrt(|u_0|^2 + sum_{k != 0} |k|^{2m} |u_k|^2)
inline double sobolev_norm(const SpectralField& f, double m) {
  return std::sqrt(sobolev_norm_squared(f, m));
}

/// Same sum without the mean.
inline double homogeneous_norm(const SpectralField& f, double m) {
  return std::sqrt(homogeneous_norm_squared(f, m));
}

template <std::size_t D>
double homogeneous_norm_vector(const std::array<SpectralField, D>& v, double m) {
  double acc = 0.0;
  for (const auto& f : v) acc += homogeneous_norm_squared(f, m);
  return std::sqrt(acc);
}

template <std::size_t D>
double sobolev_norm_vector(const std::array<SpectralField, D>& v, double m) {
  double acc = 0.0;
  for (const auto& f : v) acc += sobolev_norm_squared(f, m);
  return std::sqrt(acc);
}

inline double inner_product_m(const SpectralField& u, const SpectralField& v, double m) {
  u.check_same(v);
  if (!(m >= 0.0)) throw DomainError("Sobolev order must be non-negative");
  const auto& w = lattice_weights(u.n(), m);
  const auto& a = u.coeffs();
  const auto& b = v.coeffs();
  double acc = a[0].real() * b[0].real() + a[0].imag() * b[0].imag();
  for (std::size_t s = 1; s < a.size(); ++s) {
    acc += w[s] * (a[s].real() * b[s].real() + a[s].imag() * b[s].imag());
  }
  return acc;
}

struct MeanSplit {
  double mean = 0.0;
  SpectralField homogeneous_part;
};

inline MeanSplit project_mean(const SpectralField& f) {
  MeanSplit out{f.mean(), f};
  out.homogeneous_part.coeffs()[0] = 0.0;
  return out;
}

inline SpectralField homogeneous_part(const SpectralField& f) {
  return project_mean(f).homogeneous_part;
}

/// Component j carries i k_j u_k.  The Nyquist slot of the differentiated axis
/// is zeroed: the derivative of the real Nyquist cosine is not representable.
inline SpectralField partial(const SpectralField& f, int axis) {
  SpectralField out(f.grid());
  const Lattice& lat = lattice(f.n());
  const auto& c = f.coeffs();
  auto& d = out.coeffs();
  for (std::size_t s = 0; s < c.size(); ++s) {
    const int kj = lat.k[s][axis];
    if (f.grid().is_nyquist(kj)) continue;
    d[s] = complex(0.0, double(kj)) * c[s];
  }
  return out;
}

inline std::array<SpectralField, 3> gradient(const SpectralField& f) {
  return {partial(f, 0), partial(f, 1), partial(f, 2)};
}

inline SpectralField laplacian(const SpectralField& f) {
  SpectralField out(f.grid());
  const Lattice& lat = lattice(f.n());
  const auto& c = f.coeffs();
  auto& d = out.coeffs();
  for (std::size_t s = 0; s < c.size(); ++s) d[s] = -double(lat.norm2[s]) * c[s];
  return out;
}

/// Zeroes every coefficient with |k_i| > band on some axis.
inline void truncate(SpectralField& f, int band) {
  const Lattice& lat = lattice(f.n());
  auto& c = f.coeffs();
  for (std::size_t s = 0; s < c.size(); ++s) {
    const Wavevector& k = lat.k[s];
    if (std::abs(k.k1) > band || std::abs(k.k2) > band || std::abs(k.k3) > band) c[s] = 0.0;
  }
}

/// Evaluates the trigonometric polynomial at arbitrary points.
class PointEvaluator {
 public:
  PointEvaluator() = default;
  explicit PointEvaluator(const SpectralField& f, double tol = 0.0) {
    const Lattice& lat = lattice(f.n());
    const auto& c = f.coeffs();
    const int half = f.n() / 2;
    constant_ = c.empty() ? 0.0 : c[0].real();
    for (std::size_t s = 1; s < c.size(); ++s) {
      if (std::abs(c[s]) <= tol) continue;
      Term t;
      t.c = c[s];
      for (int j = 0; j < 3; ++j) {
        t.k[j] = lat.k[s][j];
        t.nyquist[j] = std::abs(t.k[j]) == half;
      }
      terms_.push_back(t);
    }
  }

  double operator()(const Point& x) const {
    double acc = constant_;
    for (const Term& t : terms_) {
      complex z = t.c;
      for (int j = 0; j < 3; ++j) {
        if (t.k[j] == 0) continue;
        const double phase = t.k[j] * x[j];
        z *= t.nyquist[j] ? complex(std::cos(phase), 0.0)
                          : complex(std::cos(phase), std::sin(phase));
      }
      acc += z.real();
    }
    return acc;
  }

  std::size_t terms() const { return terms_.size(); }

 private:
  struct Term {
    complex c;
    std::array<int, 3> k{};
    std::array<bool, 3> nyquist{};
  };
  double constant_ = 0.0;
  std::vector<Term> terms_;
};

}  // namespace nordstrom
