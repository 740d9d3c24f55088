#include <cmath>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"

#include "nordstrom/energy_monitor.hpp"
#include "nordstrom/evolver.hpp"
#include "nordstrom_verify/oracles.hpp"

using namespace nordstrom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralField cos1(const GridSpec& g) {
  SpectralField f(g);
  f.set_mode({1, 0, 0}, 0.5);
  return f;
}

Series sampled(double t_end, int n, const std::function<double(double)>& fn) {
  Series s;
  for (int i = 0; i < n; ++i) {
    const double t = t_end * i / (n - 1);
    s.t.push_back(t);
    s.y.push_back(fn(t));
  }
  return s;
}

}  // namespace

TEST_CASE("V and the energy functional", "[energy]") {
  const GridSpec g(8, 1.0, 0.5);
  const WaveState consts{0.0, SpectralField::constant(g, 2.0), SpectralField::constant(g, -1.0)};
  for (const auto& c : assemble_V(consts)) CHECK(sobolev_norm(c, 0.0) == 0.0);
  CHECK(energy(WaveState::zero(g), 2.0) == 0.0);

  const WaveState wave{0.0, cos1(g), SpectralField(g)};
  const auto V = assemble_V(wave);
  const auto v0 = inverse_transform(V[0]);
  const auto v1 = inverse_transform(V[1]);
  for (std::size_t s = 0; s < v0.size(); ++s) {
    const double x = g.point(s)[0];
    CHECK_THAT(v0[s], WithinAbs(0.5 * std::cos(x), 1e-14));
    CHECK_THAT(v1[s], WithinAbs(-std::sin(x), 1e-14));
  }
  CHECK(sobolev_norm(V[2], 0.0) == 0.0);
  CHECK(sobolev_norm(V[3], 0.0) == 0.0);
  for (double m : {0.0, 1.0, 3.0}) CHECK_THAT(energy(wave, m), WithinRel(0.625, 1e-14));

  std::mt19937_64 rng(3);
  const WaveState rnd{0.0, oracle::random_field(g, 3, 1.0, rng), oracle::random_field(g, 3, 1.0, rng)};
  CHECK(assemble_V(rnd)[0].mean() == 0.0);
}

TEST_CASE("Gronwall lemma equality cases", "[gronwall]") {
  const auto down = gronwall_lemma_check(sampled(3.0, 301, [](double t) { return std::exp(-t); }),
                                         sampled(3.0, 301, [](double) { return -1.0; }),
                                         sampled(3.0, 301, [](double) { return 0.0; }));
  CHECK(down.hypothesis_holds);
  CHECK(down.conclusion_holds);
  const auto up = gronwall_lemma_check(sampled(3.0, 301, [](double t) { return std::exp(t); }),
                                       sampled(3.0, 301, [](double) { return 1.0; }),
                                       sampled(3.0, 301, [](double) { return 0.0; }));
  CHECK(up.hypothesis_holds);
  CHECK(up.conclusion_holds);
  CHECK(up.passed());

  const auto steep = gronwall_lemma_check(sampled(3.0, 301, [](double t) { return std::exp(2.0 * t); }),
                                          sampled(3.0, 301, [](double) { return 1.0; }),
                                          sampled(3.0, 301, [](double) { return 0.0; }));
  CHECK_FALSE(steep.hypothesis_holds);
  CHECK_FALSE(steep.conclusion_holds);
}

TEST_CASE("Gronwall lemma with the slack as forcing", "[gronwall]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    auto g = [=](double t) { return 2.0 + a * std::sin(3.0 * t) + b * t * t / 4.0; };
    auto dg = [=](double t) { return 3.0 * a * std::cos(3.0 * t) + b * t / 2.0; };
    auto A = [=](double t) { return c * std::cos(t); };
    auto f = [=](double t) { return dg(t) - A(t) * g(t) + 1e-3; };
    const auto r = gronwall_lemma_check(sampled(2.0, 4001, g), sampled(2.0, 4001, A), sampled(2.0, 4001, f));
    CHECK(r.hypothesis_holds);
    CHECK(r.conclusion_holds);
  }
  CHECK_THROWS_AS(gronwall_lemma_check(Series{{0, 1}, {1, 1}}, Series{{0, 1}, {1, 1}}, Series{{0, 1}, {1, 1}}),
                  DimensionError);
}

TEST_CASE("Gronwall bound along free and forced runs", "[gronwall]") {
  const GridSpec g(8, 1.0, 0.5);
  const Series zero{{0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
  CHECK(gronwall_bound(0.0, zero, zero, 0.0, 2.0, 0.5) == 0.0);
  CHECK_THROWS_AS(gronwall_bound(1.0, zero, zero, 0.0, 3.0, 0.5), DomainError);

  std::mt19937_64 rng(19);
  const WaveState init{0.0, oracle::random_field(g, 3, 0.3, rng), oracle::random_field(g, 3, 0.3, rng)};
  const auto free = solve_linear(init, Forcing{}, 10.0, 201);
  EnergyReport rep;
  energy_and_bound(free, 1.0, SourceSpec::constant(0.0), rep);
  CHECK(rep.gronwall_holds);
  CHECK(rep.warnings.empty());

  Series uh, src;
  for (const auto& s : free.states) {
    uh.t.push_back(s.time);
    uh.y.push_back(homogeneous_norm(s.u, 1.0));
    src.t.push_back(s.time);
    src.y.push_back(0.0);
  }
  for (std::size_t i = 0; i < free.size(); i += 20) {
    const double b = gronwall_bound(rep.energy.front(), uh, src, 0.0, free.states[i].time, 0.5);
    CHECK(rep.energy[i] <= b * (1.0 + 1e-6));
    CHECK_THAT(b, WithinRel(rep.gronwall_bound[i], 1e-9));
  }

  int flagged = 0;
  for (std::size_t i = 1; i < rep.energy.size(); ++i) {
    if (10.0 * rep.energy[i] > rep.gronwall_bound[i]) ++flagged;
  }
  CHECK(flagged > 0);

  const auto forced = timestep_solve(init, SourceSpec::constant(0.05), 6.0, 0.01, {5});
  EnergyReport fr;
  energy_and_bound(forced, 1.0, SourceSpec::constant(0.05), fr);
  CHECK(fr.gronwall_holds);
}

TEST_CASE("decay diagnostics", "[decay]") {
  const double kappa = 0.5;
  const GridSpec g(8, 1.0, kappa);
  const auto zero = solve_linear(WaveState::zero(g), Forcing{}, 20.0, 81);
  const auto zr = decay_diagnostics(zero, 1.0, SourceSpec::constant(0.0));
  for (const auto& [lo, hi] : zr.metric_ratio) {
    CHECK(lo == 1.0);
    CHECK(hi == 1.0);
  }
  CHECK(zr.mu == 0.0);

  std::mt19937_64 rng(23);
  const WaveState init{0.0, homogeneous_part(oracle::random_field(g, 2, 0.2, rng)),
                       homogeneous_part(oracle::random_field(g, 2, 0.2, rng))};
  double prev = std::numeric_limits<double>::infinity();
  for (double t_end : {20.0, 40.0, 60.0}) {
    const auto tr = solve_linear(init, Forcing{}, t_end, int(t_end * 4) + 1);
    const auto rep = decay_diagnostics(tr, 1.0, SourceSpec::constant(0.0));
    CHECK(rep.mu < prev);
    prev = rep.mu;
  }
  CHECK(prev < 1e-9);

  const auto short_run = solve_linear(init, Forcing{}, 5.0, 11);
  CHECK_THROWS_AS(decay_diagnostics(short_run, 1.0, SourceSpec::constant(0.0)), DomainError);
}

TEST_CASE("decay exponent fit", "[decay]") {
  std::vector<double> t, y;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.1 * i);
    y.push_back(3.0 * std::exp(-0.7 * t.back()));
  }
  CHECK_THAT(fit_decay_exponent(t, y, 0.0, 10.0), WithinRel(0.7, 1e-12));
  CHECK_THROWS_AS(fit_decay_exponent(t, y, 20.0, 30.0), DomainError);
}

TEST_CASE("monotone energy", "[energy]") {
  const GridSpec g(8, 1.0, 0.5);
  CHECK(monotone_energy_check(solve_linear(WaveState::zero(g), Forcing{}, 4.0, 5), 1.0));
  const auto free = solve_linear({0.0, cos1(g), SpectralField(g)}, Forcing{}, 10.0, 401);
  CHECK(monotone_energy_check(free, 1.0));

  const GridSpec c(4, 1.0, 0.5);
  SpectralField f(c);
  f.set_mode({1, 0, 0}, 0.01);
  const WaveState init{0.0, f, SpectralField::constant(c, 1.0)};
  const auto blow = timestep_solve(init, SourceSpec::constant(8.0), 3.0, 1e-3, {10});
  REQUIRE(blow.blowup_suspected);
  CHECK_FALSE(monotone_energy_check(blow, 1.0));
}

TEST_CASE("metric interval", "[metric]") {
  const GridSpec g(8, 1.0, 0.5);
  const auto [lo, hi] = metric_interval(SpectralField(g));
  CHECK(lo == 1.0);
  CHECK(hi == 1.0);
  SpectralField u = cos1(g);
  u *= 0.4;
  const auto [a, b] = metric_interval(u);
  CHECK_THAT(a, WithinRel(0.36, 1e-13));
  CHECK_THAT(b, WithinRel(1.96, 1e-13));
  u *= 5.0;
  const auto [c, d] = metric_interval(u);
  CHECK(c == 0.0);
  CHECK_THAT(d, WithinRel(9.0, 1e-13));
}
