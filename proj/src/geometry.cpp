#include "pblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pblab::geometry {

double parabolic_distance(const ParabolicPoint& p, const ParabolicPoint& q, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double d = p.x[i] - q.x[i];
    s += d * d;
  }
  return std::sqrt(s) + std::sqrt(std::fabs(p.t - q.t));
}

bool ParabolicCylinder::contains(const ParabolicPoint& p, int n) const {
  Vec d{};
  for (int i = 0; i < n; ++i) d[i] = p.x[i] - center.x[i];
  if (norm_prime(d, n) >= r) return false;
  if (std::fabs(d[n - 1]) >= r) return false;
  return p.t > center.t - r * r && p.t <= center.t;
}

bool ParabolicCylinder::contains_closure(const ParabolicPoint& p, int n) const {
  const double eps = 1e-12 * r;
  Vec d{};
  for (int i = 0; i < n; ++i) d[i] = p.x[i] - center.x[i];
  if (norm_prime(d, n) > r + eps) return false;
  if (std::fabs(d[n - 1]) > r + eps) return false;
  return p.t >= center.t - r * r - eps && p.t <= center.t + eps;
}

BoundaryGraph BoundaryGraph::flat_graph(double R) {
  BoundaryGraph g;
  g.family = GraphFamily::flat;
  g.R = R;
  g.L = 0.0;
  return g;
}

BoundaryGraph BoundaryGraph::cone_graph(double L, double R) {
  BoundaryGraph g;
  g.family = GraphFamily::cone;
  g.R = R;
  g.L = L;
  return g;
}

BoundaryGraph BoundaryGraph::radial(const moduli::ModulusSpec& omega, double L, double R,
                                    double sign) {
  BoundaryGraph g;
  g.family = GraphFamily::radial_profile;
  g.omega = omega;
  g.R = R;
  g.L = L;
  g.sign = sign;
  return g;
}

BoundaryGraph BoundaryGraph::wave(double amplitude, double frequency, double R) {
  BoundaryGraph g;
  g.family = GraphFamily::time_wave;
  g.amplitude = amplitude;
  g.frequency = frequency;
  g.R = R;
  g.L = std::fabs(amplitude * frequency);
  return g;
}

double BoundaryGraph::eval(const Vec& xprime, double t, int n) const {
  switch (family) {
    case GraphFamily::flat:
      return offset;
    case GraphFamily::cone:
      return L * norm_prime(xprime, n);
    case GraphFamily::radial_profile: {
      const double s = norm_prime(xprime, n);
      if (s == 0.0) return 0.0;
      const double se = std::min(s, omega.eta0);
      return sign * s * moduli::eval_modulus(omega, se);
    }
    case GraphFamily::time_wave:
      return amplitude * std::sin(frequency * std::sqrt(std::fabs(t)));
    case GraphFamily::custom: {
      const double xp = xprime[0];
      const double sigma = std::sqrt(std::max(0.0, -t));
      if (strict_patch &&
          (xp < grid_xp.front() || xp > grid_xp.back() || sigma > grid_sigma.back()))
        throw std::domain_error("BoundaryGraph: query outside sampled patch");
      const auto locate = [](const std::vector<double>& g, double v, double& w) {
        if (v <= g.front()) {
          w = 0;
          return std::size_t{0};
        }
        if (v >= g.back()) {
          w = 1;
          return g.size() - 2;
        }
        const auto it = std::upper_bound(g.begin(), g.end(), v);
        const std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
        w = (v - g[i]) / (g[i + 1] - g[i]);
        return i;
      };
      double wx, ws;
      const std::size_t ix = locate(grid_xp, xp, wx);
      const std::size_t is = locate(grid_sigma, sigma, ws);
      const std::size_t nx = grid_xp.size();
      const double v00 = grid_vals[is * nx + ix], v01 = grid_vals[is * nx + ix + 1];
      const double v10 = grid_vals[(is + 1) * nx + ix], v11 = grid_vals[(is + 1) * nx + ix + 1];
      return (1 - ws) * ((1 - wx) * v00 + wx * v01) + ws * ((1 - wx) * v10 + wx * v11);
    }
  }
  return 0.0;
}

bool ParabolicDomain::contains(const ParabolicPoint& p) const {
  ParabolicCylinder q{ParabolicPoint{}, R};
  if (!q.contains(p, n)) return false;
  return p.x[n - 1] > graph.eval(p.x, p.t, n);
}

double vertical_gap(const ParabolicDomain& dom, const ParabolicPoint& p) {
  const double gap = p.x[dom.n - 1] - dom.graph.eval(p.x, p.t, dom.n);
  if (!(gap > 0.0) || !ParabolicCylinder{ParabolicPoint{}, dom.R}.contains(p, dom.n))
    throw std::domain_error("vertical_gap: point not in the domain");
  return gap;
}

double lateral_boundary_distance(const ParabolicDomain& dom, const ParabolicPoint& p) {
  const int n = dom.n;
  const double gap = vertical_gap(dom, p);
  // The vertical candidate realizes d_p <= gap, so the minimizer lives within
  // |y' - x'| <= gap and |s - t| <= gap^2.
  Vec cy{};
  for (int i = 0; i < n - 1; ++i) cy[i] = p.x[i];
  double ct = p.t;
  double half_x = gap * 1.05, half_t = gap * gap * 1.05;

  const auto dist_to = [&](const Vec& yp, double s) {
    ParabolicPoint b;
    for (int i = 0; i < n - 1; ++i) b.x[i] = yp[i];
    b.x[n - 1] = dom.graph.eval(yp, s, n);
    b.t = s;
    return parabolic_distance(p, b, n);
  };

  double best = gap;  // vertical candidate (y' = x', s = t)
  Vec best_y = cy;
  double best_t = ct;
  const int kPts = 17;
  for (int round = 0; round < 5; ++round) {
    if (n == 1) {
      for (int jt = 0; jt < kPts; ++jt) {
        const double s = ct + half_t * (2.0 * jt / (kPts - 1) - 1.0);
        const double d = dist_to(Vec{}, s);
        if (d < best) {
          best = d;
          best_t = s;
        }
      }
    } else if (n == 2) {
      for (int jx = 0; jx < kPts; ++jx) {
        Vec yp{};
        yp[0] = cy[0] + half_x * (2.0 * jx / (kPts - 1) - 1.0);
        for (int jt = 0; jt < kPts; ++jt) {
          const double s = ct + half_t * (2.0 * jt / (kPts - 1) - 1.0);
          const double d = dist_to(yp, s);
          if (d < best) {
            best = d;
            best_y = yp;
            best_t = s;
          }
        }
      }
    } else {
      for (int jx = 0; jx < kPts; ++jx)
        for (int jy = 0; jy < kPts; ++jy) {
          Vec yp{};
          yp[0] = cy[0] + half_x * (2.0 * jx / (kPts - 1) - 1.0);
          yp[1] = cy[1] + half_x * (2.0 * jy / (kPts - 1) - 1.0);
          for (int jt = 0; jt < kPts; ++jt) {
            const double s = ct + half_t * (2.0 * jt / (kPts - 1) - 1.0);
            const double d = dist_to(yp, s);
            if (d < best) {
              best = d;
              best_y = yp;
              best_t = s;
            }
          }
        }
    }
    cy = best_y;
    ct = best_t;
    half_x *= 2.2 / (kPts - 1);
    half_t *= 2.2 / (kPts - 1);
  }
  return best;
}

double local_seminorm(const BoundaryGraph& graph, const ThinCylinder& q, int n, int samples,
                      std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 17);
  const double r = q.r;

  if (n == 1) {
    // x' is empty: only time pairs contribute.
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double ta = q.t - r * r * rng.uniform();
      const double tb = q.t - r * r * rng.uniform();
      if (ta == tb) continue;
      const double num = std::fabs(graph.eval(Vec{}, ta, n) - graph.eval(Vec{}, tb, n));
      best = std::max(best, num / std::sqrt(std::fabs(ta - tb)));
    }
    return best;
  }

  const auto quotient = [&](const Vec& a, double ta, const Vec& b, double tb) {
    double dx = 0;
    for (int i = 0; i < n - 1; ++i) {
      const double d = a[i] - b[i];
      dx += d * d;
    }
    const double dp = std::sqrt(dx) + std::sqrt(std::fabs(ta - tb));
    if (dp < 1e-14) return 0.0;
    return std::fabs(graph.eval(a, ta, n) - graph.eval(b, tb, n)) / dp;
  };

  const auto sample_pt = [&](Vec& xp, double& t) {
    for (;;) {
      double s2 = 0;
      for (int i = 0; i < n - 1; ++i) {
        xp[i] = q.xprime[i] + r * rng.uniform(-1.0, 1.0);
        const double d = xp[i] - q.xprime[i];
        s2 += d * d;
      }
      if (s2 < r * r) break;
    }
    t = q.t - r * r * rng.uniform();
  };

  double best = 0.0;
  // Stratified random pairs: half at comparable separation, half nested by
  // dyadic factors to catch the near-diagonal supremum.
  for (int i = 0; i < samples; ++i) {
    Vec a{}, b{};
    double ta, tb;
    sample_pt(a, ta);
    if (i % 2 == 0) {
      sample_pt(b, tb);
    } else {
      const double scale = std::exp2(-static_cast<double>(1 + i % 24));
      for (int k = 0; k < n - 1; ++k) b[k] = a[k] + r * scale * rng.uniform(-1.0, 1.0);
      tb = ta + r * r * scale * scale * rng.uniform(-1.0, 1.0);
      tb = std::min(tb, q.t);
    }
    best = std::max(best, quotient(a, ta, b, tb));
  }
  // Deterministic pairs: axis-aligned near-diagonal offsets around the center,
  // plus pairs through the center itself (cones attain the sup there).
  for (int j = 0; j <= 24; ++j) {
    const double s = r * std::exp2(-static_cast<double>(j));
    for (int axis = 0; axis < n - 1; ++axis) {
      Vec a = q.xprime, b = q.xprime;
      a[axis] += s;
      b[axis] -= s;
      best = std::max(best, quotient(a, q.t, q.xprime, q.t));
      best = std::max(best, quotient(a, q.t, b, q.t));
    }
    Vec a = q.xprime;
    best = std::max(best, quotient(a, q.t, a, q.t - std::min(s * s, r * r)));
    Vec c = q.xprime;
    c[0] += s;
    best = std::max(best, quotient(c, q.t - 0.5 * std::min(s * s, r * r), q.xprime, q.t));
  }
  // Near-diagonal pairs at interior radii, where radial profiles peak.
  for (double frac : {0.25, 0.5, 0.75, 0.9, 0.99, 0.999}) {
    for (int j = 4; j <= 20; ++j) {
      const double s = frac * r;
      const double delta = r * std::exp2(-static_cast<double>(j));
      if (s - delta <= 0) continue;
      Vec a = q.xprime, b = q.xprime;
      a[0] += s;
      b[0] += s - delta;
      best = std::max(best, quotient(a, q.t, b, q.t));
    }
  }
  return best;
}

namespace {

C1CheckResult check_c1(const ParabolicDomain& dom, const moduli::ModulusSpec& omega, double eta0,
                       const SamplingGrid& grid, bool interior) {
  C1CheckResult out;
  out.margin = std::numeric_limits<double>::infinity();
  const int m = grid.per_axis;
  const int n = dom.n;
  const int nx = n >= 2 ? m : 1;
  const int ny = n >= 3 ? m : 1;
  for (int it = 0; it < m; ++it) {
    const double t = -eta0 * eta0 * static_cast<double>(it) / (m - 1);
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < ny; ++iy) {
        Vec xp{};
        if (n >= 2) xp[0] = eta0 * (2.0 * ix / (nx - 1) - 1.0);
        if (n >= 3) xp[1] = eta0 * (2.0 * iy / (ny - 1) - 1.0);
        if (norm_prime(xp, n) >= eta0) continue;
        const double rho = norm_prime(xp, n) + std::sqrt(-t);
        if (rho > omega.eta0) continue;
        const double bound = rho * moduli::eval_modulus(omega, rho);
        const double gamma = dom.graph.eval(xp, t, n);
        const double margin = interior ? bound - gamma : gamma + bound;
        if (margin < out.margin) out.margin = margin;
        if (margin < -1e-12) {
          out.holds = false;
          out.witness.x = xp;
          out.witness.t = t;
          return out;
        }
      }
  }
  return out;
}

}  // namespace

std::string C1CheckResult::witness_csv_row() const {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g", witness.x[0], witness.x[1],
                witness.x[2], witness.t, margin);
  return buf;
}

C1CheckResult check_interior_C1(const ParabolicDomain& dom, const moduli::ModulusSpec& omega,
                                double eta0, const SamplingGrid& grid) {
  return check_c1(dom, omega, eta0, grid, true);
}

C1CheckResult check_exterior_C1(const ParabolicDomain& dom, const moduli::ModulusSpec& omega,
                                double eta0, const SamplingGrid& grid) {
  return check_c1(dom, omega, eta0, grid, false);
}

}  // namespace pblab::geometry
