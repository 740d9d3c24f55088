#include <cmath>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"

#include "nordstrom/evolver.hpp"
#include "nordstrom_verify/oracles.hpp"

using namespace nordstrom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_coeff_gap(const SpectralField& a, const SpectralField& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) worst = std::max(worst, std::abs(a.coeffs()[s] - b.coeffs()[s]));
  return worst;
}

}  // namespace

TEST_CASE("picard with a zero source is the free solution", "[picard]") {
  const GridSpec g(8, 1.0, 0.5);
  std::mt19937_64 rng(1);
  const auto f = oracle::random_field(g, 2, 0.05, rng);
  const auto v = oracle::random_field(g, 2, 0.05, rng);
  const WaveState init{0.0, f, v};
  const auto res = picard_solve(init, SourceSpec::constant(0.0), 3.0, 1.0, 1e-12, 10, {40, 0});
  CHECK(res.report.converged);
  CHECK(res.report.iterates == 1);
  const auto free = solve_linear(init, Forcing{}, 3.0, 40);
  CHECK(max_coeff_gap(res.trajectory.back().u, free.back().u) < 1e-14);
}

TEST_CASE("picard on constant data follows the reduced ODE", "[picard]") {
  const GridSpec g(4, 1.0, 0.5);
  const double a0 = 0.02, f0 = 0.01, g0 = 0.02;
  const WaveState init{0.0, SpectralField::constant(g, f0), SpectralField::constant(g, g0)};
  const auto res = picard_solve(init, SourceSpec::constant(a0), 4.0, 1.0, 1e-12, 50, {400, 0});
  REQUIRE(res.report.converged);
  const auto times = res.trajectory.times();
  const auto ref = oracle::homogeneous_ode(a0, f0, g0, 0.5, times);
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    worst = std::max(worst, std::abs(res.trajectory.states[i].u.mean() - ref[i]));
    CHECK(homogeneous_norm(res.trajectory.states[i].u, 0.0) == 0.0);
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("picard contracts below the small-data threshold", "[picard]") {
  const double kappa = 0.5, m = 1.0, R = 0.5;
  const auto thr = compute_thresholds(kappa, m, R, 40);
  REQUIRE(thr.epsilon > 0.0);
  const GridSpec g(8, m, kappa);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    SpectralField f = oracle::random_field(g, 2, 1.0, rng);
    SpectralField v = oracle::random_field(g, 2, 1.0, rng);
    f *= 0.5 * thr.bounds[0] / sobolev_norm(f, m + 1.0);
    v *= 0.5 * thr.bounds[1] / sobolev_norm(v, m);
    const double a0 = 0.5 * thr.source_bound();
    REQUIRE(thr.admits(sobolev_norm(f, m + 1.0), sobolev_norm(v, m), a0));
    const auto res = picard_solve({0.0, f, v}, SourceSpec::constant(a0), 6.0, R, 1e-10, 50, {120, 0});
    CHECK(res.report.converged);
    CHECK(res.report.sup_norm <= R);
    for (double q : res.report.contraction_factors) CHECK(q < 1.0);
  }
}

TEST_CASE("picard reports a ball that is too small", "[picard]") {
  const GridSpec g(4, 1.0, 0.5);
  const WaveState init{0.0, SpectralField::constant(g, 0.5), SpectralField(g)};
  CHECK_THROWS_AS(picard_solve(init, SourceSpec::constant(1.0), 1.0, 0.4, 1e-10, 10), DomainError);
  const auto res = picard_solve(init, SourceSpec::constant(5.0), 3.0, 0.6, 1e-10, 30, {60, 0});
  CHECK_FALSE(res.report.converged);
  CHECK(res.report.status != PicardStatus::converged);
}

TEST_CASE("timestepper with a zero source matches the exact solution", "[timestep]") {
  const GridSpec g(8, 1.0, 0.5);
  std::mt19937_64 rng(2);
  const WaveState init{0.0, oracle::random_field(g, 3, 1.0, rng), oracle::random_field(g, 3, 1.0, rng)};
  const auto ts = timestep_solve(init, SourceSpec::constant(0.0), 5.0, 0.01, {100});
  const auto ex = solve_linear(init, Forcing{}, 5.0, 6);
  REQUIRE(ts.size() == 6);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(sobolev_distance(ts.states[i].u, ex.states[i].u, 2.0) < 1e-8);
  }
}

TEST_CASE("timestepper agrees with undamped-free-wave oracle up to the damping factor",
          "[timestep]") {
  // With a = 0 the damped solution is e^{-kappa t} times a free wave of
  // frequency sqrt(|k|^2 - kappa^2); for one |k|^2 the oracle reproduces it.
  const GridSpec g(8, 1.0, 0.6);
  SpectralField f(g), v(g);
  f.set_mode({1, 1, 0}, complex(0.3, 0.1));
  v.set_mode({1, 1, 0}, complex(-0.2, 0.4));
  const auto ts = timestep_solve({0.0, f, v}, SourceSpec::constant(0.0), 2.0, 0.02);
  const double w2 = 2.0 - 0.36;
  // map to an undamped wave with |k'|^2 = w2 by rescaling time: t' = t sqrt(w2 / 2)
  const double t = 2.0;
  SpectralField p = f, q = v;
  q.axpy(0.6, f);
  q *= std::sqrt(2.0 / w2);
  const auto free = oracle::free_wave(p, q, t * std::sqrt(w2 / 2.0));
  SpectralField expect = free;
  expect *= std::exp(-0.6 * t);
  CHECK(max_coeff_gap(ts.back().u, expect) < 1e-10);
}

TEST_CASE("timestepper converges at second order", "[timestep]") {
  const double kappa = 0.5, m = 1.0;
  const GridSpec g(8, m, kappa);
  std::mt19937_64 rng(8);
  SpectralField f = oracle::random_field(g, 2, 0.05, rng);
  SpectralField v = oracle::random_field(g, 2, 0.05, rng);
  const std::vector<Mode> amodes{{{0, 0, 0}, 0.3}, {{1, 0, 0}, 0.05}};
  const SourceSpec a(Envelope::constant(), amodes);
  const WaveState init{0.0, f, v};
  const double t_end = 2.0;
  const auto fixed = picard_solve(init, a, t_end, 1.0, 1e-13, 60, {801, 0});
  REQUIRE(fixed.report.converged);
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025}) {
    const auto ts = timestep_solve(init, a, t_end, dt);
    err.push_back(sobolev_distance(ts.back().u, fixed.trajectory.back().u, m + 1.0));
  }
  CHECK(err[0] / err[1] >= 3.0);
  CHECK(err[1] / err[2] >= 3.0);
}

TEST_CASE("timestepper flags overflow", "[timestep]") {
  const GridSpec g(4, 1.0, 0.5);
  const WaveState init{0.0, SpectralField(g), SpectralField::constant(g, 1.0)};
  const auto tr = timestep_solve(init, SourceSpec::constant(8.0), 5.0, 1e-3, {10});
  CHECK(tr.blowup_suspected);
  REQUIRE(tr.blowup_time.has_value());
  CHECK(*tr.blowup_time < 2.2393);
  CHECK(tr.back().time <= *tr.blowup_time);
  CHECK(tr.back().is_finite());
  CHECK_THROWS_AS(timestep_solve(init, SourceSpec::constant(1.0), 1.0, 0.0), DomainError);
}

TEST_CASE("threshold constants", "[thresholds]") {
  const auto thr = compute_thresholds(0.5, 1.0, 1.0, 20);
  CHECK_THAT(thr.M1, WithinRel(3.0, 1e-9));
  CHECK_THAT(thr.M2, WithinRel(4.0, 1e-9));
  double best = 0.0, arg = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double t = 1e-4 * i;
    const double y = std::exp(-t) * t * t * (1.0 + t * t);
    if (y > best) best = y, arg = t;
  }
  CHECK_THAT(thr.M3, WithinRel(best, 1e-7));
  CHECK_THAT(arg, WithinAbs(3.87, 0.01));
  CHECK(thr.epsilon > 0.0);
  CHECK(thr.epsilon == *std::min_element(thr.bounds.begin(), thr.bounds.end()));
  CHECK(thr.surrogate_constants.probes == 20);
  CHECK_THROWS_AS(compute_thresholds(1.0, 1.0, 1.0, 10), UnsupportedParameterError);
}

TEST_CASE("pde residual", "[residual]") {
  const GridSpec g(8, 1.0, 0.5);
  std::mt19937_64 rng(6);
  const WaveState init{0.0, oracle::random_field(g, 2, 0.2, rng), oracle::random_field(g, 2, 0.2, rng)};
  const SourceSpec zero = SourceSpec::constant(0.0);
  const auto coarse = solve_linear(init, Forcing{}, 2.0, 41);
  const auto fine = solve_linear(init, Forcing{}, 2.0, 81);
  const double rc = pde_residual(coarse, zero);
  const double rf = pde_residual(fine, zero);
  CHECK(rc < 1e-3);
  CHECK(rf < rc / 10.0);

  const SourceSpec a = SourceSpec::constant(0.05);
  const auto fixed = picard_solve(init, a, 2.0, 4.0, 1e-10, 50, {100, 401});
  REQUIRE(fixed.report.converged);
  const double clean = pde_residual(fixed.trajectory, a);
  CHECK(clean <= 1e-6);
  Trajectory bad = fixed.trajectory;
  for (auto& s : bad.states) s.u *= 1.1;
  CHECK(pde_residual(bad, a) >= 100.0 * clean);

  Trajectory two;
  two.states = {init, init};
  CHECK_THROWS_AS(pde_residual(two, zero), DomainError);
}
