#include <cmath>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"

#include "nordstrom/blowup.hpp"
#include "nordstrom/evolver.hpp"
#include "nordstrom_verify/oracles.hpp"

using namespace nordstrom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Reference {
  long double lambda, beta, tau0, t0;
};

// Closed form in extended precision.
Reference reference(long double a0, long double f0, long double g0, long double kappa) {
  const long double p = 1.0L + f0;
  const long double lambda = std::pow(p * p * p * p - 2.0L * g0 * g0 / a0, 0.25L);
  const long double beta = (p - lambda) / (p + lambda);
  const long double tau0 = std::sqrt(2.0L) * kappa / (lambda * std::sqrt(a0)) * std::log(1.0L / beta) + 1.0L;
  return {lambda, beta, tau0, -std::log(2.0L - tau0) / (2.0L * kappa)};
}

}  // namespace

TEST_CASE("blow-up hypotheses", "[hypotheses]") {
  const GridSpec g(8, 1.0, 0.5);
  const SpectralField zero(g), one = SpectralField::constant(g, 1.0);
  const auto weak = check_hypotheses(1.0, 0.0, 1.0, zero, one, 0.5);
  CHECK_FALSE(weak.lambda4_nonnegative);
  CHECK_FALSE(weak.all());
  const auto strong = check_hypotheses(8.0, 0.0, 1.0, zero, one, 0.5);
  CHECK(strong.all());

  SpectralField f(g);
  f.set_mode({1, 0, 0}, -0.05);
  const auto wavy = check_hypotheses(8.0, 0.0, 1.0, f, one, 0.5);
  CHECK_FALSE(wavy.laplacian_f_nonnegative);
  CHECK(wavy.one_plus_f_positive);
}

TEST_CASE("certificate reference values", "[certificate]") {
  const auto c = certificate(8.0, 0.0, 1.0, 0.5);
  REQUIRE(c.certifies_blowup);
  REQUIRE(c.t0.has_value());
  const auto r = reference(8, 0, 1, 0.5L);
  CHECK_THAT(c.lambda4, WithinAbs(0.75, 1e-15));
  CHECK_THAT(c.lambda, WithinRel(double(r.lambda), 1e-14));
  CHECK_THAT(c.beta, WithinRel(double(r.beta), 1e-12));
  CHECK_THAT(c.tau0, WithinRel(double(r.tau0), 1e-13));
  CHECK_THAT(*c.t0, WithinRel(double(r.t0), 1e-12));
  CHECK_THAT(c.lambda, WithinAbs(0.93060, 5e-6));
  CHECK_THAT(c.beta, WithinAbs(0.035945, 5e-7));
  CHECK_THAT(c.tau0, WithinAbs(1.8935, 5e-4));
  CHECK_THAT(*c.t0, WithinAbs(2.2393, 5e-4));
  CHECK_THAT(time_map(*c.t0, 0.5), WithinAbs(c.tau0, 1e-14));

  const auto F = integrate_F_ode(8.0, 0.0, 1.0, 0.5);
  REQUIRE(F.blowup_time.has_value());
  CHECK(*F.blowup_time <= *c.t0);
}

TEST_CASE("certificate across parameters matches the extended-precision form", "[certificate]") {
  for (double kappa : {0.2, 0.5, 0.8}) {
    for (double a0 : {10.0, 50.0, 400.0}) {
      for (double f0 : {0.0, 0.3}) {
        const double g0 = 1.0;
        const auto c = certificate(a0, f0, g0, kappa);
        const auto r = reference(a0, f0, g0, kappa);
        CHECK_THAT(c.tau0, WithinRel(double(r.tau0), 1e-12));
        if (c.certifies_blowup) {
          CHECK_THAT(*c.t0, WithinRel(double(r.t0), 1e-10));
          const auto F = integrate_F_ode(a0, f0, g0, kappa);
          REQUIRE(F.blowup_time.has_value());
          CHECK(*F.blowup_time <= *c.t0);
        } else {
          CHECK(r.tau0 >= 2.0L);
        }
      }
    }
  }
}

TEST_CASE("certificate refusals", "[certificate]") {
  const auto weak = certificate(1.0, 0.0, 1.0, 0.5);
  CHECK_FALSE(weak.certifies_blowup);
  CHECK_FALSE(weak.lambda4_nonnegative);
  REQUIRE_FALSE(weak.reasons.empty());
  CHECK(weak.reasons.front().find("lambda^4") != std::string::npos);

  const auto still = certificate(8.0, 0.0, 0.0, 0.5);
  CHECK_FALSE(still.certifies_blowup);
  CHECK(still.reasons.front().find("g0 > 0") != std::string::npos);

  // g0 on the boundary sqrt(a0/2)(1+f0)^2: lambda = 0 and no certificate is issued.
  const auto edge = certificate(8.0, 0.0, 2.0, 0.5);
  CHECK(edge.lambda == 0.0);
  CHECK(std::isinf(edge.tau0));
  CHECK_FALSE(edge.certifies_blowup);
  // Approaching it, log(1/beta) ~ 2 lambda / (1+f0), so tau0 tends to a finite limit.
  const double limit = 1.0 + 2.0 * std::sqrt(2.0) * 0.5 / std::sqrt(8.0);
  double prev = 2.0;
  for (double gap : {1e-2, 1e-4, 1e-6}) {
    const auto near = certificate(8.0, 0.0, 2.0 - gap, 0.5);
    CHECK(near.lambda > 0.0);
    CHECK(std::abs(near.tau0 - limit) < std::abs(prev - limit));
    prev = near.tau0;
  }
  CHECK_THAT(prev, WithinAbs(limit, 1e-3));
  CHECK_THROWS_AS(certificate(8.0, 0.0, 1.0, 1.0), UnsupportedParameterError);
}

TEST_CASE("large a0 approaches tau0 = 1 like the small-z expansion", "[certificate]") {
  const double kappa = 0.5, f0 = 0.0, g0 = 1.0, p = 1.0 + f0;
  double prev = 2.0;
  double prev_gap = 1.0;
  for (double a0 : {1e2, 1e4, 1e6}) {
    const auto c = certificate(a0, f0, g0, kappa);
    CHECK(c.tau0 < prev);
    CHECK(c.tau0 > 1.0);
    prev = c.tau0;
    const double z = 2.0 * g0 * g0 / (a0 * std::pow(p, 4));
    const double expansion = kappa * p * std::sqrt(z) / (std::pow(1.0 - z, 0.25) * g0) * std::log(8.0 / z - 1.0);
    const double gap = std::abs((c.tau0 - 1.0) / expansion - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev - 1.0 < 0.02);
  CHECK(prev_gap < 1e-5);
}

TEST_CASE("time map", "[time]") {
  CHECK(time_map(0.0, 0.5) == 1.0);
  CHECK_THAT(time_map(std::log(4.0), 0.5), WithinAbs(1.75, 1e-15));
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> E(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double t = E(rng);
    CHECK_THAT(time_map_inverse(time_map(t, 0.7), 0.7), WithinAbs(t, 1e-12 * (1.0 + t)));
  }
  CHECK_THROWS_AS(time_map_inverse(2.0, 0.5), DomainError);
  CHECK_THROWS_AS(time_map_inverse(0.5, 0.5), DomainError);
  CHECK_THROWS_AS(time_map(-1.0, 0.5), DomainError);
}

TEST_CASE("reduced ODE", "[ode]") {
  const auto lin = integrate_F_ode(0.0, 0.2, 1.0, 0.5, 1e6, 20.0);
  CHECK_FALSE(lin.blowup_time.has_value());
  for (std::size_t i = 0; i < lin.t.size(); i += 7) {
    const double exact = 0.2 + (1.0 - std::exp(-lin.t[i])) / 1.0;
    CHECK_THAT(lin.F[i], WithinAbs(exact, 1e-8));
  }

  const auto blow = integrate_F_ode(8.0, 0.0, 1.0, 0.5);
  CHECK(blow.derivative_positive);
  REQUIRE(blow.blowup_time.has_value());
  REQUIRE(blow.bracket.has_value());
  CHECK(blow.bracket->first <= *blow.blowup_time);
  CHECK(*blow.blowup_time <= blow.bracket->second);

  const auto G = integrate_G_ode(8.0, 0.0, 1.0, 0.5);
  REQUIRE(G.blowup_time.has_value());
  CHECK_THAT(*G.blowup_time, WithinRel(*blow.blowup_time, 1e-3));

  // Independent integration of the same ODE on the samples before blow-up.
  std::vector<double> times;
  for (std::size_t i = 0; i < blow.t.size() && blow.t[i] < 0.9 * *blow.blowup_time; ++i) times.push_back(blow.t[i]);
  const auto ref = oracle::homogeneous_ode(8.0, 0.0, 1.0, 0.5, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK_THAT(blow.F[i], WithinRel(ref[i], 1e-7) || WithinAbs(ref[i], 1e-9));
  }
  CHECK_THROWS_AS(integrate_F_ode(8.0, 0.0, 1.0, 0.5, 10.0), DomainError);
}

TEST_CASE("Jensen step", "[jensen]") {
  const GridSpec g(8, 1.0, 0.5);
  const auto eq = jensen_gap(SpectralField(g), SourceSpec::constant(3.0), 0.0, 3.0);
  CHECK_THAT(eq.lhs, WithinRel(3.0, 1e-14));
  CHECK_THAT(eq.rhs, WithinRel(3.0, 1e-14));
  CHECK(eq.holds());

  SpectralField u(g);
  u.set_mode({1, 0, 0}, 0.25);
  const auto half = jensen_gap(u, SourceSpec::constant(1.0), 0.0, 1.0);
  CHECK_THAT(half.lhs, WithinRel(1.375, 1e-14));
  CHECK_THAT(half.rhs, WithinRel(1.0, 1e-14));

  std::mt19937_64 rng(77);
  int checked = 0;
  for (int attempt = 0; checked < 100 && attempt < 10000; ++attempt) {
    const auto r = oracle::random_field(g, 2, 0.15, rng);
    if (1.0 + grid_min(r) <= 0.0) continue;
    CHECK(jensen_gap(r, SourceSpec::constant(2.0), 0.0, 2.0).holds());
    ++checked;
  }
  CHECK(checked == 100);

  u *= 10.0;
  CHECK_THROWS_AS(jensen_gap(u, SourceSpec::constant(1.0), 0.0, 1.0), DomainError);
}

TEST_CASE("PDE blow-up detection", "[pde]") {
  const GridSpec g(4, 1.0, 0.5);
  const WaveState small{0.0, SpectralField::constant(g, 0.01), SpectralField(g)};
  const auto calm = timestep_solve(small, SourceSpec::constant(0.01), 5.0, 0.01, {10});
  const auto none = detect_pde_blowup(calm, 1.0);
  CHECK_FALSE(none.blowup_time.has_value());
  CHECK(none.mean_lower_bound_holds);

  const WaveState big{0.0, SpectralField(g), SpectralField::constant(g, 1.0)};
  const auto tr = timestep_solve(big, SourceSpec::constant(8.0), 5.0, 1e-4, {20});
  const auto det = detect_pde_blowup(tr, 1.0);
  REQUIRE(det.blowup_time.has_value());
  CHECK(det.mean_lower_bound_holds);
  const auto F = integrate_F_ode(8.0, 0.0, 1.0, 0.5);
  CHECK_THAT(*det.blowup_time, WithinRel(*F.blowup_time, 0.02));
}
