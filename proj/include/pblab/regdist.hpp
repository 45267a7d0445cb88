#pragma once

#include "pblab/common.hpp"
#include "pblab/geometry.hpp"

namespace pblab::regdist {

// Smooth compactly supported bump on the unit parabolic cylinder of
// R^{n-1} x R, even in the spatial slot: c * (1-|w|^2)^3_+ (1-sigma^2)^3_+
// with unit mass. Evenness reproduces affine graphs exactly.
struct MollifierKernel {
  int n = 2;

  double eval(const Vec& w, double sigma) const;
  double normalization() const;  // closed-form c for the bump profile
  double mass_by_quadrature(int order) const;
  double abs_w_moment(int order = 48) const;  // int eta(w,sigma) |w| dw dsigma
};

struct DistanceDerivatives {
  double d = 0;
  Vec grad{};
  double dt = 0;
  double hess[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

  double grad_norm(int n) const;
  double hess_norm(int n) const;  // spectral norm
};

struct BoundRow {
  geometry::ParabolicPoint point;
  double d = 0;
  double gap_ratio = 0;       // d / (x_n - Gamma)
  double grad_norm = 0;       // |grad_x d|
  double deriv_product = 0;   // (|dt d| + |D^2 d|) * d
  double seminorm = 0;        // [Gamma] over Q'_d(x', t)
  double dev_gap = 0, dev_grad = 0, dev_second = 0;  // deviations / seminorm
};

struct BoundReport {
  std::vector<BoundRow> rows;
  double fitted_C = 0;  // max over rows of the three deviations

  // (point, d, three ratios, local seminorm) rows plus a fitted-C summary row
  void write_csv(const std::string& path) const;
};

class RegularizedDistanceField {
 public:
  RegularizedDistanceField(geometry::ParabolicDomain domain, int quad_order = 16,
                           double inversion_tol = 1e-12);

  const geometry::ParabolicDomain& domain() const { return domain_; }
  int quad_order() const { return quad_order_; }
  double inversion_tol() const { return inversion_tol_; }

  // p(x, t) = (eta_{x_n} * Gamma)(x', t) + x_n, tensor Gauss-Legendre.
  double parametrization_height(const Vec& xprime, double xn, double t) const;

  // Monotone inversion of x_n -> p on the bracket [gap/2, 2 gap].
  double invert_to_distance(const geometry::ParabolicPoint& y) const;

  // 0 on and below the lateral boundary; used when sampling Dirichlet data.
  double distance_or_zero(const geometry::ParabolicPoint& y) const;

  // Central finite differences with step scaled to the distance.
  DistanceDerivatives derivatives_of_d(const geometry::ParabolicPoint& y,
                                       double step_rel = 1e-3) const;

  BoundReport verify_bounds(const std::vector<geometry::ParabolicPoint>& sample,
                            int seminorm_samples = 10000) const;

 private:
  geometry::ParabolicDomain domain_;
  int quad_order_;
  double inversion_tol_;
  // Flattened tensor rule: (w, sigma, weight * eta(w, sigma)).
  struct QNode {
    Vec w;
    double sigma;
    double weta;
  };
  std::vector<QNode> nodes_;
};

}  // namespace pblab::regdist
