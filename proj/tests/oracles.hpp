#pragma once

// Test-side oracles, independent of the implementation paths they check.

#include <cmath>

#include "pblab/geometry.hpp"
#include "pblab/moduli.hpp"

namespace pblab::oracles {

inline double sphere_area_coef(int n) {
  // measure of S^{n-1}: dxi = coef * rho^{n-1} drho
  return n == 1 ? 2.0 : (n == 2 ? 2.0 * M_PI : 4.0 * M_PI);
}

// Direct two-dimensional quadrature (radial x time) of the Gaussian-bound
// integrals over one space-time region, Hoelder pairing with |f|.
//   mvt = false: |G| <= C tau^{-n/2} exp(-c rho^2/tau)            (regions 1-2)
//   mvt = true : |G_x - G_y| <= C (r tau^{-(n+1)/2} + r^2 tau^{-n/2-1}) exp(..)
inline double region_term(int n, double C, double c, double r, double rho_lo, double rho_hi,
                          double t_lo, double t_hi, bool mvt, double rho_f,
                          const moduli::ModulusSpec& omega_f) {
  const double p = (n + 1.0) / n;
  const double cp = c * p;  // exponent scaling under the (n+1)/n power
  const auto inner = [&](double tau) {
    return quad::adaptive_simpson(
        [&](double rho) {
          return sphere_area_coef(n) * std::pow(rho, n - 1) * std::exp(-cp * rho * rho / tau);
        },
        rho_lo, rho_hi, 1e-9);
  };
  // substitute tau = u^2 to absorb the integrable endpoint behavior
  const double I = quad::adaptive_simpson(
      [&](double u) {
        const double tau = u * u;
        if (tau <= 0) return 0.0;
        double kern;
        if (!mvt)
          kern = std::pow(C * std::pow(tau, -n / 2.0), p);
        else
          kern = std::pow(
              C * (r * std::pow(tau, -(n + 1) / 2.0) + r * r * std::pow(tau, -n / 2.0 - 1.0)), p);
        return 2.0 * u * kern * inner(tau);
      },
      std::sqrt(std::max(t_lo, 0.0)), std::sqrt(t_hi), 1e-8);
  const double omega = moduli::eval_modulus(omega_f, std::min(rho_f, omega_f.eta0));
  return std::pow(std::max(I, 0.0), n / (n + 1.0)) * std::pow(rho_f, 1.0 / (n + 1.0)) * omega;
}

inline double green_bound(const geometry::ParabolicPoint& a, const geometry::ParabolicPoint& b,
                          int n, const moduli::ModulusSpec& omega_f, double c, double C) {
  const double r = geometry::parabolic_distance(a, b, n);
  int M = 1;
  while (std::ldexp(1.0, M + 1) * r < 1.25) ++M;
  // region 1: both kernels, near cylinder
  double total = 2.0 * region_term(n, C, c, r, 0.0, 2 * r, 0.0, 4 * r * r, false, 2 * r, omega_f);
  for (int k = 1; k <= M; ++k) {
    const double rk = std::ldexp(1.0, k) * r, rk1 = 2 * rk;
    total += 2.0 * region_term(n, C, c, r, rk, rk1, 0.0, 4 * r * r, false, rk1, omega_f);
    total += region_term(n, C, c, r, 0.0, rk1 + r, std::exp2(2.0 * k) * r * r - r * r,
                         std::exp2(2.0 * (k + 1)) * r * r + r * r, true, rk1 + r, omega_f);
    for (int l = 1; l < k; ++l)
      total += region_term(n, C, c, r, std::max(rk - r, 0.0), rk1 + r,
                           std::exp2(2.0 * l) * r * r - r * r,
                           std::exp2(2.0 * (l + 1)) * r * r + r * r, true, rk1 + r, omega_f);
  }
  return total;
}

}  // namespace pblab::oracles
