// Certified blow-up times next to the time at which the reduced ODE actually blows up.
#include <cstdio>

#include "nordstrom/blowup.hpp"

int main() {
  namespace ns = nordstrom;
  std::printf("%6s %6s %8s %10s %10s %10s\n", "kappa", "a0", "g0", "tau0", "t0", "t_blow");
  for (double kappa : {0.3, 0.5, 0.7}) {
    for (double a0 : {8.0, 16.0, 64.0}) {
      const double g0 = 1.0;
      const auto c = ns::certificate(a0, 0.0, g0, kappa);
      const auto ode = ns::integrate_F_ode(a0, 0.0, g0, kappa);
      std::printf("%6.2f %6.1f %8.3f %10.5f %10s %10s\n", kappa, a0, g0, c.tau0,
                  c.t0 ? std::to_string(*c.t0).c_str() : "-",
                  ode.blowup_time ? std::to_string(*ode.blowup_time).c_str() : "-");
    }
  }
}
