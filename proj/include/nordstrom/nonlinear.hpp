#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "nordstrom/fft.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"

namespace nordstrom {

/// Padded grid on which a(1+u)^3 is alias-free after truncation to
/// |k_i| <= n/2 - 1: the product has band 3n/2 + band(a), and the retained
/// band is n/2 - 1, so 2n + band(a) points suffice.
inline int dealias_size(int n, int source_band) {
  int m = 2 * n + source_band;
  return m % 2 == 0 ? m : m + 1;
}

namespace detail {

struct PaddedBuffers {
  std::vector<complex> half;
  std::vector<double> values;
};

inline PaddedBuffers& padded_buffers(int m) {
  thread_local PaddedBuffers buf;
  buf.half.assign(fft::half_size(m), complex{});
  buf.values.resize(std::size_t(m) * m * m);
  return buf;
}

/// Scatters n^3 coefficients into the m^3 half spectrum.  A Nyquist slot
/// stands for a cosine and is split evenly between +n/2 and -n/2.
inline void scatter_padded(const SpectralField& u, int m, complex* half) {
  const int n = u.n();
  const int h = m / 2 + 1;
  const Lattice& lat = lattice(n);
  const auto& c = u.coeffs();
  auto wrap = [m](int v) { return std::size_t((v % m + m) % m); };
  for (std::size_t s = 0; s < c.size(); ++s) {
    if (c[s] == complex{}) continue;
    const Wavevector& k = lat.k[s];
    std::array<std::array<int, 2>, 3> opts{};
    std::array<int, 3> count{};
    double weight = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (std::abs(k[j]) == n / 2) {
        opts[j] = {n / 2, -n / 2};
        count[j] = 2;
        weight *= 0.5;
      } else {
        opts[j] = {k[j], k[j]};
        count[j] = 1;
      }
    }
    const complex value = weight * c[s];
    for (int a = 0; a < count[0]; ++a) {
      for (int b = 0; b < count[1]; ++b) {
        for (int d = 0; d < count[2]; ++d) {
          const int k3 = opts[2][d];
          if (k3 < 0) continue;
          half[(wrap(opts[0][a]) * m + wrap(opts[1][b])) * h + std::size_t(k3)] += value;
        }
      }
    }
  }
}

/// Reads |k_i| <= n/2 - 1 back from an m^3 half spectrum, scaled by `scale`.
inline void gather_truncated(const complex* half, int m, double scale, SpectralField& out) {
  const int n = out.n();
  const int h = m / 2 + 1;
  const int band = n / 2 - 1;
  const Lattice& lat = lattice(n);
  auto& c = out.coeffs();
  auto wrap = [m](int v) { return std::size_t((v % m + m) % m); };
  for (std::size_t s = 0; s < c.size(); ++s) {
    const Wavevector& k = lat.k[s];
    if (std::abs(k.k1) > band || std::abs(k.k2) > band || std::abs(k.k3) > band) {
      c[s] = 0.0;
      continue;
    }
    if (k.k3 >= 0) {
      c[s] = scale * half[(wrap(k.k1) * m + wrap(k.k2)) * h + std::size_t(k.k3)];
    } else {
      c[s] = scale * std::conj(half[(wrap(-k.k1) * m + wrap(-k.k2)) * h + std::size_t(-k.k3)]);
    }
  }
}

}  // namespace detail

/// Spectral coefficients of a(t,.)(1+u)^3, without the exp(-kappa t) factor.
inline SpectralField eval_cubic_source(const SourceSpec& a, double t, const SpectralField& u) {
  const int n = u.n();
  const int m = dealias_size(n, a.bandwidth());
  auto& buf = detail::padded_buffers(m);
  detail::scatter_padded(u, m, buf.half.data());
  fft::c2r(m, buf.half.data(), buf.values.data());

  const double sigma = a.sigma(t);
  if (a.spatially_constant()) {
    const double amp = sigma * a.spatial_mean();
    for (double& v : buf.values) {
      const double w = 1.0 + v;
      v = amp * w * w * w;
    }
  } else {
    const auto& av = a.samples(m);
    for (std::size_t i = 0; i < buf.values.size(); ++i) {
      const double w = 1.0 + buf.values[i];
      buf.values[i] = sigma * av[i] * w * w * w;
    }
  }

  fft::r2c(m, buf.values.data(), buf.half.data());
  SpectralField out(u.grid());
  const double points = double(m) * m * m;
  detail::gather_truncated(buf.half.data(), m, 1.0 / points, out);
  return out;
}

/// Alias-free product v w truncated to |k_i| <= n/2 - 1.
inline SpectralField dealiased_product(const SpectralField& v, const SpectralField& w) {
  v.check_same(w);
  const int m = dealias_size(v.n(), 0);
  std::vector<complex> hv(fft::half_size(m)), hw(fft::half_size(m));
  std::vector<double> xv(std::size_t(m) * m * m), xw(xv.size());
  detail::scatter_padded(v, m, hv.data());
  detail::scatter_padded(w, m, hw.data());
  fft::c2r(m, hv.data(), xv.data());
  fft::c2r(m, hw.data(), xw.data());
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= xw[i];
  fft::r2c(m, xv.data(), hv.data());
  SpectralField out(v.grid());
  detail::gather_truncated(hv.data(), m, 1.0 / (double(m) * m * m), out);
  return out;
}

}  // namespace nordstrom
