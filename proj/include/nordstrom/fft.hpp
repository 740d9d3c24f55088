#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

namespace nordstrom::fft {

// Real <-> half-spectrum transforms on an M^3 periodic grid.  The half
// spectrum uses FFTW's layout (i1*M + i2)*(M/2+1) + i3.  Plans are built once
// per size with FFTW_ESTIMATE | FFTW_UNALIGNED so that results do not depend
// on buffer alignment, and executed through the new-array interface, which
// FFTW documents as thread-safe.

inline std::size_t half_size(int m) { return std::size_t(m) * m * (m / 2 + 1); }

namespace detail {

struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

inline std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

inline const PlanPair& plans(int m) {
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  std::vector<double> real(std::size_t(m) * m * m);
  std::vector<std::complex<double>> half(half_size(m));
  auto* cplx = reinterpret_cast<fftw_complex*>(half.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.r2c = fftw_plan_dft_r2c_3d(m, m, m, real.data(), cplx, flags);
  p.c2r = fftw_plan_dft_c2r_3d(m, m, m, cplx, real.data(), flags | FFTW_PRESERVE_INPUT);
  if (p.c2r == nullptr) {
    // Multi-dimensional c2r cannot always preserve its input.
    p.c2r = fftw_plan_dft_c2r_3d(m, m, m, cplx, real.data(), flags);
  }
  return cache.emplace(m, p).first->second;
}

}  // namespace detail

/// Unnormalized forward transform: out_k = sum_j in_j exp(-i k.x_j).
inline void r2c(int m, const double* in, std::complex<double>* out) {
  fftw_execute_dft_r2c(detail::plans(m).r2c, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

/// Unnormalized inverse transform; the input buffer may be overwritten.
inline void c2r(int m, std::complex<double>* in, double* out) {
  fftw_execute_dft_c2r(detail::plans(m).c2r, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace nordstrom::fft
