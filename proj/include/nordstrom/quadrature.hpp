#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "nordstrom/errors.hpp"

namespace nordstrom {

/// Quadrature rule on [-1, 1].
struct Rule {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const { return x.size(); }
};

/// n-point Gauss-Legendre rule, cached per n.
inline const Rule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
  static std::map<int, Rule> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  // legendre_p_zeros returns the non-negative roots in increasing order.
  const std::vector<double> roots = boost::math::legendre_p_zeros<double>(n);
  Rule r;
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it2 = roots.rbegin(); it2 != roots.rend(); ++it2) {
    if (*it2 == 0.0) continue;
    r.x.push_back(-*it2);
    r.w.push_back(weight(*it2));
  }
  for (double x : roots) {
    r.x.push_back(x);
    r.w.push_back(weight(x));
  }
  return cache.emplace(n, std::move(r)).first->second;
}

/// Nodes and weights of `rule` mapped to [a, b].
struct MappedNode {
  double t;
  double w;
};

inline std::vector<MappedNode> map_rule(const Rule& rule, double a, double b) {
  std::vector<MappedNode> out(rule.size());
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < rule.size(); ++i) out[i] = {mid + half * rule.x[i], half * rule.w[i]};
  return out;
}

/// Composite trapezoid rule on samples (t_i, y_i).
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y,
                        std::size_t count) {
  double acc = 0.0;
  for (std::size_t i = 1; i < count; ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

}  // namespace nordstrom
