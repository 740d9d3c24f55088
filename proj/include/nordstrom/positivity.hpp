#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "nordstrom/errors.hpp"
#include "nordstrom/quadrature.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/wave_state.hpp"

namespace nordstrom {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

/// Product rule on S^2: Gauss-Legendre in cos(theta) times the trapezoid
/// rule in phi.  Exact for spherical harmonics of degree <= `degree`.
struct SphereQuadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return nodes.size(); }
};

inline SphereQuadrature sphere_rule(int degree = 35) {
  if (degree < 1) throw DomainError("sphere rule degree must be positive");
  const int n_theta = (degree + 2) / 2;
  const int n_phi = degree + 1;
  const Rule& gl = gauss_legendre(n_theta);
  SphereQuadrature q;
  q.degree = degree;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double z = gl.x[i];
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = two_pi * (j + 0.5) / n_phi;
      q.nodes.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
      q.weights.push_back(gl.w[i] * two_pi / n_phi);
    }
  }
  return q;
}

struct KirchhoffOptions {
  int sphere_degree = 35;
  int radial_nodes = 32;
  double panel = 0.05;     // width of the retarded-time panels
  int panel_nodes = 4;     // Gauss-Legendre nodes per panel
};

/// Spherical mean (1/4pi) sum w f(x + r xi), with periodic wrap.
template <class Fn>
double sphere_mean(const Fn& f, const Point& x, double r, const SphereQuadrature& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Point& xi = q.nodes[i];
    acc += q.weights[i] * f(Point{wrap_angle(x[0] + r * xi[0]), wrap_angle(x[1] + r * xi[1]),
                                  wrap_angle(x[2] + r * xi[2])});
  }
  return acc / four_pi;
}

/// Free wave phi_1 with phi(0) = 1 + f, phi_t(0) = h:
///   (t/4pi) int_S h(x+t xi) + (t^2/4pi) int_B Lap f(x+t xi) + (1/4pi) int_S (1 + f(x+t xi)).
inline double kirchhoff_free(const SpectralField& f, const SpectralField& h, double t,
                             const Point& x, const SphereQuadrature& quad,
                             int radial_nodes = 32) {
  if (!(t >= 0.0)) throw DomainError("kirchhoff_free needs t >= 0");
  const PointEvaluator fe(f), he(h), lfe(laplacian(f));
  const double mean_f = sphere_mean(fe, x, t, quad);
  const double mean_h = sphere_mean(he, x, t, quad);
  // int_{|xi|<=1} g(x + t xi) d xi = int_0^1 r^2 int_S g(x + t r xi) dw dr
  double ball = 0.0;
  if (t > 0.0) {
    for (const auto& nd : map_rule(gauss_legendre(radial_nodes), 0.0, 1.0)) {
      ball += nd.w * nd.t * nd.t * four_pi * sphere_mean(lfe, x, t * nd.t, quad);
    }
  }
  return t * mean_h + t * t * ball / four_pi + 1.0 + mean_f;
}

/// G(phi) = e^{-3 kappa t} a(t,x) phi^3 + kappa^2 phi
inline double G_eval(double phi, double t, const Point& x, const SourceSpec& a, double kappa) {
  return std::exp(-3.0 * kappa * t) * a.value(t, x) * phi * phi * phi + kappa * kappa * phi;
}

struct SpaceTimeGrid {
  int n_space = 8;    // points per axis
  int n_time = 11;    // samples over [0, t_end], including both ends
  double t_end = 1.0;

  double dt() const { return t_end / (n_time - 1); }
  double time(int i) const { return i == n_time - 1 ? t_end : i * dt(); }
};

/// phi_n sampled on a space-time grid; values[i] holds the n_space^3 grid
/// values at time sample i.
struct PhiIterate {
  int level = 0;
  SpaceTimeGrid grid;
  std::vector<std::vector<double>> values;

  /// Cubic Lagrange interpolation in time of the whole spatial slice.
  std::vector<double> slice_at(double s) const {
    if (s < -1e-12 || s > grid.t_end + 1e-12) {
      throw DomainError("phi interpolation requested outside the time grid");
    }
    const int nt = grid.n_time;
    const std::size_t width = std::min(4, nt);
    const double dt = grid.dt();
    int i = std::clamp(int(std::floor(s / dt)), 0, nt - 1);
    int lo = std::clamp(i - 1, 0, nt - int(width));
    std::vector<double> out(values.front().size(), 0.0);
    for (std::size_t a = 0; a < width; ++a) {
      double l = 1.0;
      for (std::size_t b = 0; b < width; ++b) {
        if (a != b) l *= (s - grid.time(lo + int(b))) / (grid.time(lo + int(a)) - grid.time(lo + int(b)));
      }
      const auto& v = values[std::size_t(lo) + a];
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += l * v[k];
    }
    return out;
  }
};

namespace detail {

/// Sphere-quadrature multipliers: applying the spherical-mean quadrature of
/// radius r to the trigonometric interpolant multiplies mode k by
///   (1/4pi) sum_i w_i cos(r k.xi_i)
/// (the rule is symmetric under xi -> -xi, so the sine part cancels).
class MeanMultipliers {
 public:
  MeanMultipliers(const GridSpec& g, const SphereQuadrature& q) : lat_(&lattice(g.n_per_dim)), q_(&q) {
    const std::size_t slots = lat_->k.size();
    dots_.resize(slots * q.size());
    for (std::size_t s = 0; s < slots; ++s) {
      const Wavevector& k = lat_->k[s];
      for (std::size_t i = 0; i < q.size(); ++i) {
        const Point& xi = q.nodes[i];
        dots_[s * q.size() + i] = k.k1 * xi[0] + k.k2 * xi[1] + k.k3 * xi[2];
      }
    }
  }

  std::vector<double> compute(double r) const {
    const std::size_t slots = lat_->k.size();
    const std::size_t nq = q_->size();
    std::vector<double> out(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      double acc = 0.0;
      const double* d = &dots_[s * nq];
      for (std::size_t i = 0; i < nq; ++i) acc += q_->weights[i] * std::cos(r * d[i]);
      out[s] = acc / four_pi;
    }
    return out;
  }

 private:
  const Lattice* lat_;
  const SphereQuadrature* q_;
  std::vector<double> dots_;
};

inline SpectralField apply_multiplier(const SpectralField& f, const std::vector<double>& m) {
  SpectralField out(f.grid());
  const auto& c = f.coeffs();
  auto& o = out.coeffs();
  for (std::size_t s = 0; s < c.size(); ++s) o[s] = m[s] * c[s];
  return out;
}

inline void drop_nyquist(SpectralField& f) { truncate(f, f.n() / 2 - 1); }

}  // namespace detail

/// Monotone iteration phi_{n+1} = free part + (1/4pi) int_0^t (t-s) int_S G(phi_n)(s, x+(t-s)xi).
///
/// Each time slice is represented by its trigonometric interpolant on the
/// space grid, so the sphere quadrature acts on it as a per-mode multiplier
/// and the sum over nodes x becomes an inverse transform.  In time the slices
/// are interpolated by cubic Lagrange polynomials.
inline std::vector<PhiIterate> kirchhoff_iterate(const SpectralField& f, const SpectralField& g,
                                                 const SourceSpec& a, double kappa,
                                                 const SpaceTimeGrid& stg, int n_levels,
                                                 const KirchhoffOptions& opt = {}) {
  if (n_levels < 1) throw DomainError("n_levels must be at least 1");
  if (stg.n_time < 2 || !(stg.t_end > 0.0)) throw DomainError("space-time grid needs t_end > 0 and two samples");
  if (!(kappa >= 0.0 && kappa < 1.0)) throw UnsupportedParameterError("kappa must lie in [0,1)");
  const GridSpec sg(stg.n_space, 0.0, 0.5);  // only the lattice is used
  auto resample = [&](const SpectralField& src) {
    SpectralField out(sg);
    const int band = std::min(src.n(), sg.n_per_dim) / 2 - 1;
    const Lattice& lat = lattice(src.n());
    for (std::size_t s = 0; s < src.size(); ++s) {
      const Wavevector& k = lat.k[s];
      if (std::abs(k.k1) > band || std::abs(k.k2) > band || std::abs(k.k3) > band) continue;
      out.coeffs()[sg.index(k)] = src.coeffs()[s];
    }
    return out;
  };
  const SpectralField fs = resample(f);
  SpectralField hs = resample(g);
  hs.axpy(kappa, fs);
  hs.coeffs()[0] += kappa;  // h = kappa (1 + f) + g

  const SphereQuadrature quad = sphere_rule(opt.sphere_degree);
  const detail::MeanMultipliers mult(sg, quad);
  const Lattice& lat = lattice(sg.n_per_dim);
  const std::size_t points = sg.points();

  // Free part at every sample time.
  PhiIterate free_part{1, stg, {}};
  const Rule& radial = gauss_legendre(opt.radial_nodes);
  for (int i = 0; i < stg.n_time; ++i) {
    const double t = stg.time(i);
    const auto m_t = mult.compute(t);
    SpectralField phi = detail::apply_multiplier(fs, m_t);
    phi.coeffs()[0] += 1.0;
    phi.axpy(t, detail::apply_multiplier(hs, m_t));
    if (t > 0.0) {
      std::vector<double> ball(points, 0.0);
      for (const auto& nd : map_rule(radial, 0.0, 1.0)) {
        const auto m_r = mult.compute(t * nd.t);
        for (std::size_t s = 0; s < points; ++s) ball[s] += nd.w * nd.t * nd.t * m_r[s];
      }
      // ball holds (1/4pi) int_B e^{i t k.xi}; Lap multiplies by -|k|^2.
      for (std::size_t s = 0; s < points; ++s) {
        phi.coeffs()[s] += t * t * (-double(lat.norm2[s])) * ball[s] * fs.coeffs()[s];
      }
    }
    free_part.values.push_back(inverse_transform(phi));
  }

  std::vector<PhiIterate> levels;
  levels.push_back(PhiIterate{0, stg, std::vector<std::vector<double>>(
                                          std::size_t(stg.n_time), std::vector<double>(points, 0.0))});
  levels.push_back(free_part);

  // Retarded-time nodes: panels aligned with the samples.
  struct SNode {
    int interval;  // sample interval [t_j, t_{j+1}] containing s
    int index;     // node index within the interval
    double s, w;
  };
  std::vector<SNode> snodes;
  const double dt = stg.dt();
  const int panels = std::max(1, int(std::ceil(dt / opt.panel - 1e-12)));
  const Rule& prule = gauss_legendre(opt.panel_nodes);
  for (int j = 0; j + 1 < stg.n_time; ++j) {
    int idx = 0;
    const double a0 = stg.time(j), a1 = stg.time(j + 1);
    const double h = (a1 - a0) / panels;
    for (int p = 0; p < panels; ++p) {
      for (const auto& nd : map_rule(prule, a0 + p * h, a0 + (p + 1) * h)) {
        snodes.push_back({j, idx++, nd.t, nd.w});
      }
    }
  }
  // Multipliers depend on r = t_i - s only through (i - j, node index).
  std::map<std::pair<int, int>, std::vector<double>> cache;
  auto multiplier = [&](int i, const SNode& sn) -> const std::vector<double>& {
    auto key = std::make_pair(i - sn.interval, sn.index);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    return cache.emplace(key, mult.compute(stg.time(i) - sn.s)).first->second;
  };

  std::vector<double> grid_a(points);
  for (int level = 2; level <= n_levels; ++level) {
    const PhiIterate& prev = levels.back();
    std::vector<SpectralField> acc(std::size_t(stg.n_time), SpectralField(sg));
    for (const SNode& sn : snodes) {
      std::vector<double> phi = prev.slice_at(sn.s);
      const double e = std::exp(-3.0 * kappa * sn.s);
      const double sigma = a.sigma(sn.s);
      const auto& av = a.samples(sg.n_per_dim);
      for (std::size_t k = 0; k < points; ++k) {
        const double p = phi[k];
        phi[k] = e * sigma * av[k] * p * p * p + kappa * kappa * p;
      }
      SpectralField Gs = forward_transform(sg, phi);
      detail::drop_nyquist(Gs);
      for (int i = sn.interval + 1; i < stg.n_time; ++i) {
        const double r = stg.time(i) - sn.s;
        const auto& m = multiplier(i, sn);
        auto& out = acc[std::size_t(i)].coeffs();
        const auto& c = Gs.coeffs();
        const double w = sn.w * r;
        for (std::size_t k = 0; k < points; ++k) out[k] += w * m[k] * c[k];
      }
    }
    PhiIterate next{level, stg, {}};
    for (int i = 0; i < stg.n_time; ++i) {
      std::vector<double> v = inverse_transform(acc[std::size_t(i)]);
      const auto& fp = free_part.values[std::size_t(i)];
      for (std::size_t k = 0; k < points; ++k) v[k] += fp[k];
      next.values.push_back(std::move(v));
    }
    levels.push_back(std::move(next));
  }
  levels.resize(std::size_t(n_levels) + 1);
  return levels;
}

struct PositivityHypotheses {
  bool a_positive = false;
  bool one_plus_f_positive = false;
  bool g_nonnegative = false;
  bool laplacian_f_nonnegative = false;
  double min_a = 0.0, min_one_plus_f = 0.0, min_g = 0.0, min_laplacian_f = 0.0;

  bool all() const {
    return a_positive && one_plus_f_positive && g_nonnegative && laplacian_f_nonnegative;
  }
};

inline PositivityHypotheses check_positivity_hypotheses(const SpectralField& f,
                                                        const SpectralField& g,
                                                        const SourceSpec& a,
                                                        const std::vector<double>& probe_times) {
  auto grid_min = [](const SpectralField& x) {
    const auto v = inverse_transform(x);
    return *std::min_element(v.begin(), v.end());
  };
  PositivityHypotheses h;
  h.min_a = std::numeric_limits<double>::infinity();
  for (double t : probe_times) h.min_a = std::min(h.min_a, a.min_on_grid(t, f.grid()));
  h.min_one_plus_f = 1.0 + grid_min(f);
  h.min_g = grid_min(g);
  h.min_laplacian_f = grid_min(laplacian(f));
  h.a_positive = h.min_a > 0.0;
  h.one_plus_f_positive = h.min_one_plus_f > 0.0;
  h.g_nonnegative = h.min_g >= -1e-12;
  h.laplacian_f_nonnegative = h.min_laplacian_f >= -1e-12;
  return h;
}

struct MinOnePlusU {
  double value = 1.0;
  Point location{};
  double time = 0.0;
};

inline MinOnePlusU min_one_plus_u(const Trajectory& tr) {
  MinOnePlusU out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& s : tr.states) {
    const auto v = inverse_transform(s.u);
    const auto it = std::min_element(v.begin(), v.end());
    if (1.0 + *it < out.value) {
      out.value = 1.0 + *it;
      out.location = s.grid().point(std::size_t(it - v.begin()));
      out.time = s.time;
    }
  }
  return out;
}

}  // namespace nordstrom
