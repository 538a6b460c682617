#include <cmath>

#include "phases/optimizer.hpp"

namespace phases {

double symmetric_bipodal_root(double eps, double tau) {
  // f(a) = a^3 + 3 a (2 eps - a)^2 - 4 tau, f'(a) = 12 (a - eps)^2 >= 0
  auto f = [&](double a) {
    const double d = 2.0 * eps - a;
    return a * a * a + 3.0 * a * d * d - 4.0 * tau;
  };
  double lo = eps, hi = 2.0 * eps;
  if (f(lo) > 0.0 || f(hi) < 0.0) throw DomainError("no symmetric bipodal root in [eps, 2 eps]");
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

StepGraphon reference_construction(double eps, double tau) {
  if (!(eps > 0.0 && eps <= 0.5))
    throw DomainError("reference construction needs edge density in (0, 0.5]");
  const double upper = std::pow(eps, 1.5);
  if (!(tau >= 0.0 && tau <= upper + 1e-15))
    throw DomainError("triangle density outside [0, eps^(3/2)]");
  const double er = eps * eps * eps;
  if (tau <= er) {
    const double x = std::cbrt(er - tau);
    return StepGraphon::symmetric_bipodal(std::max(0.0, eps - x), std::min(1.0, eps + x));
  }
  if (tau <= 2.0 * er) {
    const double a = symmetric_bipodal_root(eps, tau);
    return StepGraphon::symmetric_bipodal(std::min(1.0, a), std::max(0.0, 2.0 * eps - a));
  }
  // A clique block of mass c and internal density p with isolated spectators:
  // c^2 p = eps, c^3 p^3 = tau.
  const double c = eps / std::cbrt(tau);
  const double p = std::min(1.0, std::cbrt(tau * tau) / eps);
  if (c >= 1.0) return StepGraphon::constant(eps);
  return StepGraphon({c, 1.0 - c}, {p, 0.0, 0.0, 0.0});
}

}  // namespace phases
