// Energy of damped free waves: sqrt(E) decays like exp(-kappa t).
#include <cmath>
#include <cstdio>
#include <vector>

#include "nordstrom/energy_monitor.hpp"
#include "nordstrom/linear_solver.hpp"

int main() {
  namespace ns = nordstrom;
  for (double kappa : {0.1, 0.5, 0.9}) {
    const ns::GridSpec grid(8, 1.0, kappa);
    ns::SpectralField f(grid), g(grid);
    f.set_mode({1, 0, 0}, 0.1);
    f.set_mode({1, 1, 0}, {0.05, -0.02});
    g.set_mode({0, 2, 1}, 0.05);
    const double t_end = 40.0;
    const auto tr = ns::solve_linear({0.0, f, g}, ns::Forcing{}, t_end, 401);
    std::vector<double> t, y;
    for (const auto& s : tr.states) {
      t.push_back(s.time);
      y.push_back(std::sqrt(ns::energy(s, 1.0)));
    }
    std::printf("kappa %.2f  fitted rate %.4f  sqrt(E) at t=%g: %.3e\n", kappa,
                ns::fit_decay_exponent(t, y, t_end / 2, t_end), t_end, y.back());
  }
}
