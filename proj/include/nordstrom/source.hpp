#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/fft.hpp"
#include "nordstrom/grid.hpp"
#include "nordstrom/spectral_field.hpp"

namespace nordstrom {

/// Time factor sigma(t) of a separable source.
struct Envelope {
  enum class Kind { constant, exponential, polynomial };

  Kind kind = Kind::constant;
  double rate = 0.0;                  // exponential: exp(rate * t)
  std::vector<double> coefficients;   // polynomial: sum c_i t^i

  static Envelope constant() { return {}; }
  static Envelope exponential(double rate) { return {Kind::exponential, rate, {}}; }
  static Envelope polynomial(std::vector<double> c) {
    if (c.empty()) throw DomainError("polynomial envelope needs at least one coefficient");
    return {Kind::polynomial, 0.0, std::move(c)};
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::exponential:
        return std::exp(rate * t);
      case Kind::polynomial: {
        double acc = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t + *it;
        return acc;
      }
      case Kind::constant:
      default:
        return 1.0;
    }
  }
};

/// a(t,x) = sigma(t) A(x) with A a real trigonometric polynomial.
class SourceSpec {
 public:
  SourceSpec() : SourceSpec(constant(0.0)) {}

  static SourceSpec constant(double a0) {
    return SourceSpec(Envelope::constant(), {Mode{{0, 0, 0}, complex(a0, 0.0)}});
  }

  SourceSpec(Envelope envelope, std::vector<Mode> modes, double tol = 1e-12)
      : envelope_(std::move(envelope)), cache_(std::make_shared<Cache>()) {
    for (const Mode& md : modes) {
      auto match = [&](const Mode& o) { return o.k == md.k; };
      if (std::any_of(modes_.begin(), modes_.end(), match)) {
        auto it = std::find_if(modes_.begin(), modes_.end(), match);
        if (std::abs(it->c - md.c) > tol * (1.0 + std::abs(md.c))) {
          throw CorruptFieldError("source coefficients are not conjugate-symmetric");
        }
        continue;
      }
      modes_.push_back(md);
      if (!md.k.is_zero()) modes_.push_back(Mode{-md.k, std::conj(md.c)});
      else if (std::abs(md.c.imag()) > tol * (1.0 + std::abs(md.c))) {
        throw CorruptFieldError("mean of the source must be real");
      }
    }
    for (const Mode& md : modes_) {
      band_ = std::max({band_, std::abs(md.k.k1), std::abs(md.k.k2), std::abs(md.k.k3)});
    }
  }

  const Envelope& envelope() const { return envelope_; }
  double sigma(double t) const { return envelope_(t); }
  const std::vector<Mode>& modes() const { return modes_; }
  int bandwidth() const { return band_; }

  bool spatially_constant() const {
    return std::all_of(modes_.begin(), modes_.end(),
                       [](const Mode& md) { return md.k.is_zero() || md.c == complex{}; });
  }
  bool time_independent() const {
    if (envelope_.kind == Envelope::Kind::constant) return true;
    if (envelope_.kind == Envelope::Kind::exponential) return envelope_.rate == 0.0;
    return std::all_of(envelope_.coefficients.begin() + 1, envelope_.coefficients.end(),
                       [](double c) { return c == 0.0; });
  }
  bool is_zero() const {
    return std::all_of(modes_.begin(), modes_.end(),
                       [](const Mode& md) { return md.c == complex{}; });
  }

  /// Spatial mean of A.
  double spatial_mean() const {
    for (const Mode& md : modes_) {
      if (md.k.is_zero()) return md.c.real();
    }
    return 0.0;
  }
  /// Value of a spatially constant source at t = 0.
  double a0() const { return sigma(0.0) * spatial_mean(); }

  double value(double t, const Point& x) const {
    double acc = 0.0;
    for (const Mode& md : modes_) {
      const double phase = md.k.k1 * x[0] + md.k.k2 * x[1] + md.k.k3 * x[2];
      acc += md.c.real() * std::cos(phase) - md.c.imag() * std::sin(phase);
    }
    return sigma(t) * acc;
  }

  /// A(x) as a field on the grid (the envelope is not applied).
  SpectralField spatial_field(const GridSpec& grid) const {
    SpectralField f(grid);
    for (const Mode& md : modes_) {
      if (!grid.contains(md.k) || grid.has_nyquist(md.k)) {
        throw DimensionError("source bandwidth exceeds the grid");
      }
      f.coeffs()[grid.index(md.k)] = md.c;
    }
    return f;
  }

  SpectralField field(double t, const GridSpec& grid) const {
    return sigma(t) * spatial_field(grid);
  }

  /// Samples of A on an m^3 grid, computed once per size.
  const std::vector<double>& samples(int m) const {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->values.find(m);
    if (it != cache_->values.end()) return it->second;
    if (2 * band_ >= m) throw DimensionError("source bandwidth exceeds the grid");
    std::vector<complex> half(fft::half_size(m));
    const int h = m / 2 + 1;
    for (const Mode& md : modes_) {
      if (md.k.k3 < 0) continue;
      auto wrap = [m](int v) { return std::size_t((v % m + m) % m); };
      half[(wrap(md.k.k1) * m + wrap(md.k.k2)) * h + std::size_t(md.k.k3)] += md.c;
    }
    std::vector<double> out(std::size_t(m) * m * m);
    fft::c2r(m, half.data(), out.data());
    return cache_->values.emplace(m, std::move(out)).first->second;
  }

  double min_on_grid(double t, const GridSpec& grid) const {
    const auto& a = samples(grid.n_per_dim);
    return sigma(t) >= 0.0 ? sigma(t) * *std::min_element(a.begin(), a.end())
                           : sigma(t) * *std::max_element(a.begin(), a.end());
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<int, std::vector<double>> values;
  };

  Envelope envelope_;
  std::vector<Mode> modes_;
  int band_ = 0;
  std::shared_ptr<Cache> cache_;
};

}  // namespace nordstrom
