#include "pblab/regdist.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace pblab::regdist {

namespace {

double bump3(double u) {
  const double v = 1.0 - u;
  return v > 0 ? v * v * v : 0.0;
}

}  // namespace

double MollifierKernel::normalization() const {
  // 1D: int_{-1}^{1} (1-x^2)^3 dx = 32/35; 2D radial: int_{B'_1} (1-|w|^2)^3 dw = pi/4.
  const double i_sigma = 32.0 / 35.0;
  double i_w = 1.0;
  if (n == 2) i_w = 32.0 / 35.0;
  if (n == 3) i_w = M_PI / 4.0;
  return 1.0 / (i_w * i_sigma);
}

double MollifierKernel::eval(const Vec& w, double sigma) const {
  double w2 = 0;
  for (int i = 0; i < n - 1; ++i) w2 += w[i] * w[i];
  return normalization() * bump3(w2) * bump3(sigma * sigma);
}

double MollifierKernel::mass_by_quadrature(int order) const {
  const auto& xs = quad::gl_nodes(order);
  const auto& ws = quad::gl_weights(order);
  double total = 0;
  if (n == 1) {
    for (int j = 0; j < order; ++j) total += ws[j] * eval(Vec{}, xs[j]);
  } else if (n == 2) {
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j) {
        Vec w{};
        w[0] = xs[i];
        total += ws[i] * ws[j] * eval(w, xs[j]);
      }
  } else {
    for (int i0 = 0; i0 < order; ++i0)
      for (int i1 = 0; i1 < order; ++i1)
        for (int j = 0; j < order; ++j) {
          Vec w{};
          w[0] = xs[i0];
          w[1] = xs[i1];
          total += ws[i0] * ws[i1] * ws[j] * eval(w, xs[j]);
        }
  }
  return total;
}

double MollifierKernel::abs_w_moment(int order) const {
  const auto& xs = quad::gl_nodes(order);
  const auto& ws = quad::gl_weights(order);
  double total = 0;
  if (n == 1) return 0.0;
  if (n == 2) {
    // |w| kinks at 0: integrate each half (polynomial there, rule is exact)
    for (int half = 0; half < 2; ++half) {
      const double sgn = half == 0 ? -0.5 : 0.5;
      for (int i = 0; i < order; ++i) {
        const double w0 = sgn + 0.5 * xs[i];
        for (int j = 0; j < order; ++j) {
          Vec w{};
          w[0] = w0;
          total += 0.5 * ws[i] * ws[j] * eval(w, xs[j]) * std::fabs(w0);
        }
      }
    }
    return total;
  }
  for (int i0 = 0; i0 < order; ++i0)
    for (int i1 = 0; i1 < order; ++i1)
      for (int j = 0; j < order; ++j) {
        Vec w{};
        w[0] = xs[i0];
        w[1] = xs[i1];
        total += ws[i0] * ws[i1] * ws[j] * eval(w, xs[j]) * std::hypot(xs[i0], xs[i1]);
      }
  return total;
}

double DistanceDerivatives::grad_norm(int n) const { return norm2(grad, n); }

double DistanceDerivatives::hess_norm(int n) const {
  const int nn = std::min(n, 3);
  double a[9] = {0};
  for (int i = 0; i < nn; ++i)
    for (int j = 0; j < nn; ++j) a[i * nn + j] = hess[i][j];
  const auto e = linalg::sym_eigen(a, nn);
  double m = 0;
  for (int k = 0; k < nn; ++k) m = std::max(m, std::fabs(e.values[k]));
  return m;
}

RegularizedDistanceField::RegularizedDistanceField(geometry::ParabolicDomain domain,
                                                   int quad_order, double inversion_tol)
    : domain_(std::move(domain)), quad_order_(quad_order), inversion_tol_(inversion_tol) {
  MollifierKernel kernel{domain_.n};
  const auto& xs = quad::gl_nodes(quad_order_);
  const auto& ws = quad::gl_weights(quad_order_);
  const int n = domain_.n;
  if (n == 1) {
    for (int j = 0; j < quad_order_; ++j)
      nodes_.push_back({Vec{}, xs[j], ws[j] * kernel.eval(Vec{}, xs[j])});
  } else if (n == 2) {
    for (int i = 0; i < quad_order_; ++i)
      for (int j = 0; j < quad_order_; ++j) {
        Vec w{};
        w[0] = xs[i];
        const double we = ws[i] * ws[j] * kernel.eval(w, xs[j]);
        if (we != 0.0) nodes_.push_back({w, xs[j], we});
      }
  } else {
    for (int i0 = 0; i0 < quad_order_; ++i0)
      for (int i1 = 0; i1 < quad_order_; ++i1)
        for (int j = 0; j < quad_order_; ++j) {
          Vec w{};
          w[0] = xs[i0];
          w[1] = xs[i1];
          const double we = ws[i0] * ws[i1] * ws[j] * kernel.eval(w, xs[j]);
          if (we != 0.0) nodes_.push_back({w, xs[j], we});
        }
  }
}

double RegularizedDistanceField::parametrization_height(const Vec& xprime, double xn,
                                                        double t) const {
  if (!(xn > 0)) throw std::domain_error("parametrization_height: requires x_n > 0");
  const int n = domain_.n;
  const auto family = domain_.graph.family;
  if (family == geometry::GraphFamily::flat) return xn + domain_.graph.offset;

  // Time-independent graphs in n = 2: the sigma integral factors out exactly,
  // and radial kinks (|x'| at the apex) are handled by splitting the w rule
  // at the kink so each piece is smooth.
  const bool radial_kink =
      family == geometry::GraphFamily::cone || family == geometry::GraphFamily::radial_profile;
  if (n == 2 && !domain_.graph.time_dependent()) {
    const auto& ws = quad::gl_nodes(quad_order_);
    const auto& wt = quad::gl_weights(quad_order_);
    const double bnorm = 35.0 / 32.0;  // 1 / int (1-w^2)^3 dw
    const auto bump = [](double w) {
      const double v = 1.0 - w * w;
      return v > 0 ? v * v * v : 0.0;
    };
    const auto segment = [&](double a, double b) {
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      double acc = 0;
      for (int i = 0; i < quad_order_; ++i) {
        const double w = mid + half * ws[i];
        Vec y = xprime;
        y[0] += xn * w;
        acc += wt[i] * bump(w) * domain_.graph.eval(y, t, n);
      }
      return acc * half;
    };
    const double wstar = radial_kink ? -xprime[0] / xn : 2.0;
    double conv;
    if (wstar > -1.0 && wstar < 1.0)
      conv = segment(-1.0, wstar) + segment(wstar, 1.0);
    else
      conv = segment(-1.0, 1.0);
    return bnorm * conv + xn;
  }

  const double xn2 = xn * xn;
  double acc = 0;
  for (const QNode& q : nodes_) {
    Vec y = xprime;
    for (int i = 0; i < n - 1; ++i) y[i] += xn * q.w[i];
    acc += q.weta * domain_.graph.eval(y, t + xn2 * q.sigma, n);
  }
  return acc + xn;
}

double RegularizedDistanceField::invert_to_distance(const geometry::ParabolicPoint& y) const {
  const int n = domain_.n;
  const double gap = y.x[n - 1] - domain_.graph.eval(y.x, y.t, n);
  if (!(gap > 0)) throw std::domain_error("invert_to_distance: point not above the graph");
  if (domain_.graph.family == geometry::GraphFamily::flat) return gap;

  // The parametrized column is (x', p(x', xi, t), t): invert p(x', ., t) = y_n.
  Vec xp{};
  for (int i = 0; i < n - 1; ++i) xp[i] = y.x[i];
  const double target = y.x[n - 1];

  double a = 0.5 * gap, b = 2.0 * gap;
  double fa = parametrization_height(xp, a, y.t) - target;
  double fb = parametrization_height(xp, b, y.t) - target;
  if (fa > 0 || fb < 0) {
    // Monotonicity must give a sign change on the vertical-gap bracket.
    const double dpn = (parametrization_height(xp, 1.001 * gap, y.t) -
                        parametrization_height(xp, 0.999 * gap, y.t)) /
                       (0.002 * gap);
    throw SolverError("invert_to_distance: bracket failure, d_n p estimate " +
                      std::to_string(dpn));
  }
  // Safeguarded secant within the bisection bracket.
  double x = a - fa * (b - a) / (fb - fa);
  for (int it = 0; it < 200; ++it) {
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    const double fx = parametrization_height(xp, x, y.t) - target;
    if (std::fabs(fx) <= inversion_tol_) return x;
    if (fx > 0) {
      b = x;
      fb = fx;
    } else {
      a = x;
      fa = fx;
    }
    const double secant = a - fa * (b - a) / (fb - fa);
    x = (secant > a && secant < b) ? secant : 0.5 * (a + b);
    if (b - a < 1e-17 * gap) return 0.5 * (a + b);
  }
  return x;
}

double RegularizedDistanceField::distance_or_zero(const geometry::ParabolicPoint& y) const {
  const int n = domain_.n;
  const double gap = y.x[n - 1] - domain_.graph.eval(y.x, y.t, n);
  if (gap <= 0) return 0.0;
  // Boundary-hugging points (cut positions land within rounding of the
  // graph): d = gap up to O(seminorm * gap), below any tolerance in use.
  if (gap <= 1e-12) return gap;
  geometry::ParabolicPoint p = y;
  return invert_to_distance(p);
}

DistanceDerivatives RegularizedDistanceField::derivatives_of_d(const geometry::ParabolicPoint& y,
                                                               double step_rel) const {
  const int n = domain_.n;
  DistanceDerivatives out;
  out.d = invert_to_distance(y);
  const double h = step_rel * out.d;
  if (out.d < 5.0 * h)
    throw ResolutionError("derivatives_of_d: point too close to the boundary for the stencil");

  const auto dval = [&](int axis, double s1, int axis2, double s2, double dt) {
    geometry::ParabolicPoint q = y;
    if (axis >= 0) q.x[axis] += s1;
    if (axis2 >= 0) q.x[axis2] += s2;
    q.t += dt;
    return invert_to_distance(q);
  };

  std::array<double, 3> dp{}, dm{};
  for (int i = 0; i < n; ++i) {
    dp[i] = dval(i, h, -1, 0, 0);
    dm[i] = dval(i, -h, -1, 0, 0);
    out.grad[i] = (dp[i] - dm[i]) / (2 * h);
    out.hess[i][i] = (dp[i] - 2 * out.d + dm[i]) / (h * h);
  }
  out.dt = (dval(-1, 0, -1, 0, h) - dval(-1, 0, -1, 0, -h)) / (2 * h);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dpp = dval(i, h, j, h, 0);
      const double dpm = dval(i, h, j, -h, 0);
      const double dmp = dval(i, -h, j, h, 0);
      const double dmm = dval(i, -h, j, -h, 0);
      const double v = (dpp - dpm - dmp + dmm) / (4 * h * h);
      out.hess[i][j] = out.hess[j][i] = v;
    }
  return out;
}

BoundReport RegularizedDistanceField::verify_bounds(
    const std::vector<geometry::ParabolicPoint>& sample, int seminorm_samples) const {
  BoundReport report;
  report.rows.resize(sample.size());
  const int n = domain_.n;
  par::for_each(static_cast<std::int64_t>(sample.size()), [&](std::int64_t i) {
    const auto& y = sample[static_cast<std::size_t>(i)];
    BoundRow row;
    row.point = y;
    const auto der = derivatives_of_d(y);
    row.d = der.d;
    const double gap = y.x[n - 1] - domain_.graph.eval(y.x, y.t, n);
    row.gap_ratio = der.d / gap;
    row.grad_norm = der.grad_norm(n);
    row.deriv_product = (std::fabs(der.dt) + der.hess_norm(n)) * der.d;
    geometry::ThinCylinder qd;
    for (int k = 0; k < n - 1; ++k) qd.xprime[k] = y.x[k];
    qd.t = y.t;
    qd.r = der.d;
    row.seminorm = geometry::local_seminorm(domain_.graph, qd, n, seminorm_samples);
    if (row.seminorm > 1e-14) {
      row.dev_gap = std::fabs(row.gap_ratio - 1.0) / row.seminorm;
      row.dev_grad = std::fabs(row.grad_norm - 1.0) / row.seminorm;
      row.dev_second = row.deriv_product / row.seminorm;
    }
    report.rows[static_cast<std::size_t>(i)] = row;
  });
  double c = 0;
  for (const auto& r : report.rows)
    c = std::max({c, r.dev_gap, r.dev_grad, r.dev_second});
  report.fitted_C = c;
  return report;
}

void BoundReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("BoundReport::write_csv: cannot open " + path);
  os << "x0,x1,x2,t,d,gap_ratio,grad_norm,deriv_product,seminorm\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  r.point.x[0], r.point.x[1], r.point.x[2], r.point.t, r.d, r.gap_ratio,
                  r.grad_norm, r.deriv_product, r.seminorm);
    os << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "summary,,,,,,,fitted_C,%.17g", fitted_C);
  os << buf << "\n";
}

}  // namespace pblab::regdist
