#include "pblab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>

namespace pblab::solver {

namespace {

constexpr double kAlphaFloor = 1e-8;

bool in_spatial_region(const GridSpec& g, const Vec& x) {
  Vec d{};
  for (int i = 0; i < g.n; ++i) d[i] = x[i] - g.cyl.center.x[i];
  const double tol = 1e-12 * g.cyl.r;
  if (norm_prime(d, g.n) >= g.cyl.r - tol) return false;
  return std::fabs(d[g.n - 1]) < g.cyl.r - tol;
}

// Distance (in units of s along direction dir*e_axis) to the cylinder side,
// +inf when the arm never leaves within one cell.
double face_crossing(const GridSpec& g, const Vec& x, int axis, int dir) {
  const double sign = dir == 1 ? 1.0 : -1.0;
  if (axis == g.n - 1) {
    const double face = g.cyl.center.x[axis] + sign * g.cyl.r;
    return sign * (face - x[axis]);
  }
  if (g.n == 2) {
    const double face = g.cyl.center.x[0] + sign * g.cyl.r;
    return sign * (face - x[0]);
  }
  // n == 3: |x' + s sign e_axis - c'| = r
  Vec d{};
  for (int i = 0; i < g.n - 1; ++i) d[i] = x[i] - g.cyl.center.x[i];
  const double b = sign * d[axis];
  const double c = d[0] * d[0] + d[1] * d[1] - g.cyl.r * g.cyl.r;
  const double disc = b * b - c;
  if (disc < 0) return std::numeric_limits<double>::infinity();
  return -b + std::sqrt(disc);
}

// First crossing of the lateral graph along the arm, or +inf.
double graph_crossing(const geometry::ParabolicDomain& dom, const Vec& x, double t, int axis,
                      int dir, double h) {
  const int n = dom.n;
  const double sign = dir == 1 ? 1.0 : -1.0;
  const auto psi = [&](double s) {
    Vec y = x;
    y[axis] += sign * s;
    return y[n - 1] - dom.graph.eval(y, t, n);
  };
  if (axis == n - 1) {
    if (dir == 1) return std::numeric_limits<double>::infinity();  // gap grows upward
    const double gap = psi(0);
    return gap <= h ? gap : std::numeric_limits<double>::infinity();
  }
  // Sample then bisect the first sign change.
  const int kSub = 8;
  double lo = 0, flo = psi(0);
  for (int k = 1; k <= kSub; ++k) {
    const double s = h * k / kSub;
    const double fs = psi(s);
    if (fs <= 0) {
      double a = lo, b = s;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        if (psi(m) > 0)
          a = m;
        else
          b = m;
      }
      return 0.5 * (a + b);
    }
    lo = s;
    flo = fs;
  }
  (void)flo;
  return std::numeric_limits<double>::infinity();
}

void check_matrix_ellipticity(const double* A, int n, const barriers::EllipticityPair& ell) {
  const auto e = linalg::sym_eigen(A, n);
  const double tol = 1e-10 * std::max(1.0, ell.Lambda);
  if (e.values[0] < ell.lambda - tol || e.values[n - 1] > ell.Lambda + tol)
    throw ContractError("CoefficientField: ellipticity violated at a sampled point");
}

}  // namespace

GridSpec GridSpec::make(int n, const geometry::ParabolicCylinder& cyl, double h, double tau) {
  GridSpec g;
  g.n = n;
  g.h = h;
  g.tau = tau;
  g.cyl = cyl;
  const double cells = cyl.r / h;
  const int k = static_cast<int>(std::llround(cells));
  if (std::fabs(cells - k) > 1e-9 || k < 2)
    throw ConfigError("GridSpec: cylinder radius must be an integer number (>=2) of cells");
  for (int i = 0; i < n; ++i) {
    g.counts[i] = 2 * k + 1;
    g.origin[i] = cyl.center.x[i] - k * h;
  }
  const double stepsf = cyl.r * cyl.r / tau;
  g.steps = static_cast<int>(std::llround(stepsf));
  if (std::fabs(stepsf - g.steps) > 1e-9 || g.steps < 1)
    throw ConfigError("GridSpec: r^2 must be an integer number (>=1) of time steps");
  g.t0 = cyl.center.t - cyl.r * cyl.r;
  return g;
}

CoefficientField CoefficientField::identity(double lambda, double Lambda) {
  CoefficientField c;
  c.ell = barriers::EllipticityPair(lambda, Lambda);
  c.constant = true;
  for (int i = 0; i < 9; ++i) c.A_const[i] = 0;
  c.A_const[0] = c.A_const[4] = c.A_const[8] = lambda;
  return c;
}

CoefficientField CoefficientField::constant_matrix(const double* A, int n, double lambda,
                                                   double Lambda) {
  CoefficientField c;
  c.ell = barriers::EllipticityPair(lambda, Lambda);
  c.constant = true;
  for (int i = 0; i < 9; ++i) c.A_const[i] = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c.A_const[i * 3 + j] = A[i * n + j];
  double packed[9];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) packed[i * n + j] = A[i * n + j];
  check_matrix_ellipticity(packed, n, c.ell);
  return c;
}

CoefficientField CoefficientField::varying(std::function<void(const Vec&, double, double*)> fn,
                                           double lambda, double Lambda) {
  CoefficientField c;
  c.ell = barriers::EllipticityPair(lambda, Lambda);
  c.constant = false;
  c.eval_fn = std::move(fn);
  return c;
}

void CoefficientField::eval(const Vec& x, double t, int n, double* A) const {
  if (constant) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A[i * n + j] = A_const[i * 3 + j];
    return;
  }
  eval_fn(x, t, A);
}

bool CoefficientField::diagonal(int n) const {
  if (!constant) return false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && A_const[i * 3 + j] != 0.0) return false;
  return true;
}

Classification classify_nodes(const ParabolicProblem& p, double t) {
  const GridSpec& g = p.grid;
  const int n = g.n;
  Classification cls;
  cls.t = t;
  const std::int64_t total = g.num_nodes();
  cls.status.assign(static_cast<std::size_t>(total), NodeStatus::exterior);

  std::vector<std::uint8_t> act(static_cast<std::size_t>(total), 0);
  par::for_each(total, [&](std::int64_t f) {
    const auto idx = g.unflatten(f);
    const Vec x = g.coord(idx);
    if (!in_spatial_region(g, x)) return;
    if (x[n - 1] - p.domain.graph.eval(x, t, n) <= 0) return;
    act[static_cast<std::size_t>(f)] = 1;
  });

  std::array<std::int64_t, 3> strides{};
  {
    std::int64_t s = 1;
    for (int i = n - 1; i >= 0; --i) {
      strides[i] = s;
      s *= g.counts[i];
    }
  }

  for (std::int64_t f = 0; f < total; ++f) {
    if (!act[static_cast<std::size_t>(f)]) continue;
    cls.active.push_back(f);
    const auto idx = g.unflatten(f);
    const Vec x = g.coord(idx);
    bool adjacent = false;
    std::array<Arm, 6> arms;
    for (int axis = 0; axis < n; ++axis) {
      for (int dir = 0; dir < 2; ++dir) {
        Arm arm;
        const int nb_i = idx[axis] + (dir == 1 ? 1 : -1);
        const bool nb_in_grid = nb_i >= 0 && nb_i < g.counts[axis];
        bool nb_active = false;
        if (nb_in_grid) {
          const std::int64_t nb = f + (dir == 1 ? strides[axis] : -strides[axis]);
          nb_active = act[static_cast<std::size_t>(nb)] != 0;
        }
        if (!nb_active) {
          const double s_face = face_crossing(g, x, axis, dir);
          const double s_graph = graph_crossing(p.domain, x, t, axis, dir, g.h);
          double s = std::min({s_face, s_graph, g.h});
          s = std::max(s, kAlphaFloor * g.h);
          arm.alpha = s / g.h;
          arm.cut = true;
          arm.cut_point = x;
          arm.cut_point[axis] += (dir == 1 ? s : -s);
          adjacent = true;
        }
        arms[static_cast<std::size_t>(2 * axis + dir)] = arm;
      }
    }
    if (adjacent) {
      cls.status[static_cast<std::size_t>(f)] = NodeStatus::boundary_adjacent;
      cls.arms.emplace(f, arms);
    } else {
      cls.status[static_cast<std::size_t>(f)] = NodeStatus::interior;
      ++cls.interior_count;
    }
  }
  return cls;
}

namespace {

struct Workspace {
  const ParabolicProblem* p = nullptr;
  const Classification* cls = nullptr;
  std::vector<double> diag;           // full-grid arrays
  std::vector<double> coef;           // 6 per node
  std::vector<std::int64_t> nb_off;   // 6 stride offsets
  std::vector<double> rhs;            // per-step
  std::vector<double> mixed;          // 3 per node (a01, a02, a12), zero when diagonal
  bool has_mixed = false;
  std::vector<std::int64_t> color[2];  // red / black active nodes
  double t = 0;
  bool warned_dominance = false;

  void build_static(const ParabolicProblem& prob, const Classification& c) {
    p = &prob;
    cls = &c;
    const GridSpec& g = prob.grid;
    const int n = g.n;
    const std::int64_t total = g.num_nodes();
    diag.assign(static_cast<std::size_t>(total), 1.0);
    coef.assign(static_cast<std::size_t>(total) * 6, 0.0);
    mixed.assign(static_cast<std::size_t>(total) * 3, 0.0);
    nb_off.assign(6, 0);
    std::int64_t s = 1;
    std::array<std::int64_t, 3> strides{};
    for (int i = n - 1; i >= 0; --i) {
      strides[i] = s;
      s *= g.counts[i];
    }
    for (int axis = 0; axis < n; ++axis) {
      nb_off[static_cast<std::size_t>(2 * axis)] = -strides[axis];
      nb_off[static_cast<std::size_t>(2 * axis + 1)] = strides[axis];
    }
    color[0].clear();
    color[1].clear();
    for (std::int64_t f : c.active) {
      const auto idx = g.unflatten(f);
      int parity = 0;
      for (int i = 0; i < n; ++i) parity += idx[i];
      color[parity & 1].push_back(f);
    }
  }

  // Coefficients of the implicit system at slice time t_new; Dirichlet cut
  // values folded into rhs_bc (returned separately so rhs can be rebuilt).
  void assemble(double t_new, std::vector<double>& rhs_bc) {
    const GridSpec& g = p->grid;
    const int n = g.n;
    t = t_new;
    const double h2 = g.h * g.h;
    rhs_bc.assign(static_cast<std::size_t>(g.num_nodes()), 0.0);
    has_mixed = !p->coeff.diagonal(n);

    const auto& active = cls->active;
    par::for_each(static_cast<std::int64_t>(active.size()), [&](std::int64_t ai) {
      const std::int64_t f = active[static_cast<std::size_t>(ai)];
      const auto idx = g.unflatten(f);
      const Vec x = g.coord(idx);
      double A[9];
      p->coeff.eval(x, t_new, n, A);
      if (!p->coeff.constant) check_matrix_ellipticity(A, n, p->coeff.ell);

      double dg = 1.0 / g.tau;
      const bool badj = cls->status[static_cast<std::size_t>(f)] == NodeStatus::boundary_adjacent;
      for (int axis = 0; axis < n; ++axis) {
        double ap = 1.0, am = 1.0;
        const Arm *arm_m = nullptr, *arm_p = nullptr;
        if (badj) {
          arm_m = cls->arm(f, axis, 0);
          arm_p = cls->arm(f, axis, 1);
          am = arm_m->alpha;
          ap = arm_p->alpha;
        }
        const double aii = A[axis * n + axis];
        const double cm = 2.0 * aii / (h2 * am * (am + ap));
        const double cp = 2.0 * aii / (h2 * ap * (am + ap));
        dg += 2.0 * aii / (h2 * am * ap);
        // cut arms contribute g * coef to the rhs; active arms couple nodes
        if (badj && arm_m->cut) {
          rhs_bc[static_cast<std::size_t>(f)] +=
              cm * p->dirichlet(arm_m->cut_point, t_new);
          coef[static_cast<std::size_t>(f) * 6 + 2 * axis] = 0.0;
        } else {
          coef[static_cast<std::size_t>(f) * 6 + 2 * axis] = cm;
        }
        if (badj && arm_p->cut) {
          rhs_bc[static_cast<std::size_t>(f)] +=
              cp * p->dirichlet(arm_p->cut_point, t_new);
          coef[static_cast<std::size_t>(f) * 6 + 2 * axis + 1] = 0.0;
        } else {
          coef[static_cast<std::size_t>(f) * 6 + 2 * axis + 1] = cp;
        }
      }
      diag[static_cast<std::size_t>(f)] = dg;
      if (has_mixed) {
        mixed[static_cast<std::size_t>(f) * 3 + 0] = n >= 2 ? A[0 * n + 1] : 0.0;
        mixed[static_cast<std::size_t>(f) * 3 + 1] = n >= 3 ? A[0 * n + 2] : 0.0;
        mixed[static_cast<std::size_t>(f) * 3 + 2] = n >= 3 ? A[1 * n + 2] : 0.0;
        if (!warned_dominance) {
          double offsum = 0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (i != j) offsum += std::fabs(A[i * n + j]);
          double diagmin = A[0];
          for (int i = 1; i < n; ++i) diagmin = std::min(diagmin, A[i * n + i]);
          if (offsum > diagmin) {
            warned_dominance = true;
            std::cerr << "pblab: coefficient matrix is not diagonally dominant; "
                         "the discrete comparison principle is not guaranteed\n";
          }
        }
      }
    });
  }

  // a_ij d2_ij u from the snapshot (same-color neighbors), centered cross when
  // all four corners are active, one-sided fallback otherwise.
  double mixed_term(std::int64_t f, const std::vector<double>& snap,
                    const std::vector<std::uint8_t>& active_mask) const {
    const GridSpec& g = p->grid;
    const int n = g.n;
    const double h2 = g.h * g.h;
    double acc = 0;
    int pair_id = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++pair_id) {
        const double aij = mixed[static_cast<std::size_t>(f) * 3 + pair_id];
        if (aij == 0.0) continue;
        const std::int64_t si = nb_off[static_cast<std::size_t>(2 * i + 1)];
        const std::int64_t sj = nb_off[static_cast<std::size_t>(2 * j + 1)];
        const auto on = [&](std::int64_t node) {
          return node >= 0 && node < static_cast<std::int64_t>(active_mask.size()) &&
                 active_mask[static_cast<std::size_t>(node)];
        };
        const std::int64_t pp = f + si + sj, pm = f + si - sj, mp = f - si + sj, mm = f - si - sj;
        if (on(pp) && on(pm) && on(mp) && on(mm)) {
          acc += 2.0 * aij * (snap[pp] - snap[pm] - snap[mp] + snap[mm]) / (4.0 * h2);
          continue;
        }
        // one-sided: pick the first fully active corner triple
        bool done = false;
        for (int sgn_i = 1; sgn_i >= -1 && !done; sgn_i -= 2)
          for (int sgn_j = 1; sgn_j >= -1 && !done; sgn_j -= 2) {
            const std::int64_t ci = f + sgn_i * si, cj = f + sgn_j * sj,
                               cc = f + sgn_i * si + sgn_j * sj;
            if (on(ci) && on(cj) && on(cc)) {
              acc += 2.0 * aij * sgn_i * sgn_j * (snap[cc] - snap[ci] - snap[cj] + snap[f]) / h2;
              done = true;
            }
          }
        // nothing available: term dropped
      }
    return acc;
  }
};

}  // namespace

std::vector<double> step(const ParabolicProblem& p, const Classification& cls,
                         const std::vector<double>& u_prev, double t_new,
                         const SolveOptions& opt) {
  const GridSpec& g = p.grid;
  const int n = g.n;
  const std::int64_t total = g.num_nodes();

  Workspace ws;
  ws.build_static(p, cls);

  std::vector<std::uint8_t> active_mask(static_cast<std::size_t>(total), 0);
  for (std::int64_t f : cls.active) active_mask[static_cast<std::size_t>(f)] = 1;

  if (opt.scheme == Scheme::explicit_euler) {
    const double cfl = g.h * g.h / (2.0 * n * p.coeff.ell.Lambda);
    if (g.tau > cfl * (1.0 + 1e-12))
      throw ConfigError("explicit_euler: tau exceeds the CFL bound h^2/(2 n Lambda)");
    const double t_old = t_new - g.tau;
    ws.assemble(t_old, ws.rhs);  // rhs holds Dirichlet cut contributions at t_old
    std::vector<double> u_next(static_cast<std::size_t>(total), 0.0);
    par::for_each(static_cast<std::int64_t>(cls.active.size()), [&](std::int64_t ai) {
      const std::int64_t f = cls.active[static_cast<std::size_t>(ai)];
      // L u = sum coef * nb + bc - (diag - 1/tau) * u
      double lu = ws.rhs[static_cast<std::size_t>(f)] -
                  (ws.diag[static_cast<std::size_t>(f)] - 1.0 / g.tau) *
                      u_prev[static_cast<std::size_t>(f)];
      for (int a = 0; a < 2 * n; ++a) {
        const double c = ws.coef[static_cast<std::size_t>(f) * 6 + a];
        if (c != 0.0) lu += c * u_prev[static_cast<std::size_t>(f + ws.nb_off[a])];
      }
      if (ws.has_mixed) lu += ws.mixed_term(f, u_prev, active_mask);
      const Vec x = g.coord(g.unflatten(f));
      u_next[static_cast<std::size_t>(f)] =
          u_prev[static_cast<std::size_t>(f)] + g.tau * (lu + p.source(x, t_old));
    });
    return u_next;
  }

  // implicit Euler: (1/tau - L) u = u_prev / tau + f(t_new)
  std::vector<double> rhs_bc;
  ws.assemble(t_new, rhs_bc);
  std::vector<double> rhs(static_cast<std::size_t>(total), 0.0);
  par::for_each(static_cast<std::int64_t>(cls.active.size()), [&](std::int64_t ai) {
    const std::int64_t f = cls.active[static_cast<std::size_t>(ai)];
    const Vec x = g.coord(g.unflatten(f));
    rhs[static_cast<std::size_t>(f)] = u_prev[static_cast<std::size_t>(f)] / g.tau +
                                       p.source(x, t_new) + rhs_bc[static_cast<std::size_t>(f)];
  });

  std::vector<double> u = u_prev;
  std::vector<double> snap;
  const double u_scale = std::max(
      1.0, par::max(
               static_cast<std::int64_t>(cls.active.size()),
               [&](std::int64_t ai) {
                 return std::fabs(u_prev[static_cast<std::size_t>(cls.active[static_cast<std::size_t>(ai)])]);
               },
               0.0));
  const double tol = opt.tol * u_scale;

  // Residual per node scaled by the diagonal (update-sized units), so huge
  // cut-arm diagonals do not distort the stopping rule.
  const auto residual_inf = [&]() {
    return par::max(
        static_cast<std::int64_t>(cls.active.size()),
        [&](std::int64_t ai) {
          const std::int64_t f = cls.active[static_cast<std::size_t>(ai)];
          double acc = rhs[static_cast<std::size_t>(f)] -
                       ws.diag[static_cast<std::size_t>(f)] * u[static_cast<std::size_t>(f)];
          for (int a = 0; a < 2 * n; ++a) {
            const double c = ws.coef[static_cast<std::size_t>(f) * 6 + a];
            if (c != 0.0) acc += c * u[static_cast<std::size_t>(f + ws.nb_off[a])];
          }
          if (ws.has_mixed) acc += ws.mixed_term(f, u, active_mask);
          return std::fabs(acc) / ws.diag[static_cast<std::size_t>(f)];
        },
        0.0);
  };

  if (residual_inf() <= tol) return u;  // zero-iteration path keeps exact data exact

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    if (ws.has_mixed) snap = u;
    for (int c = 0; c < 2; ++c) {
      const auto& list = ws.color[c];
      par::for_each(static_cast<std::int64_t>(list.size()), [&](std::int64_t li) {
        const std::int64_t f = list[static_cast<std::size_t>(li)];
        double acc = rhs[static_cast<std::size_t>(f)];
        for (int a = 0; a < 2 * n; ++a) {
          const double cf = ws.coef[static_cast<std::size_t>(f) * 6 + a];
          if (cf != 0.0) acc += cf * u[static_cast<std::size_t>(f + ws.nb_off[a])];
        }
        if (ws.has_mixed) acc += ws.mixed_term(f, snap, active_mask);
        const double gs = acc / ws.diag[static_cast<std::size_t>(f)];
        u[static_cast<std::size_t>(f)] =
            (1.0 - opt.sor_omega) * u[static_cast<std::size_t>(f)] + opt.sor_omega * gs;
      });
    }
    if (residual_inf() <= tol) return u;
  }
  throw SolverError("implicit step: SOR stagnation, residual " + std::to_string(residual_inf()));
}

GridFunction solve(const ParabolicProblem& p, const SolveOptions& opt) {
  const GridSpec& g = p.grid;
  const int n = g.n;
  const std::int64_t total = g.num_nodes();
  if (p.coeff.constant) {
    double A[9];
    p.coeff.eval(Vec{}, 0.0, n, A);
    check_matrix_ellipticity(A, n, p.coeff.ell);
  }

  const bool time_dep = p.domain.graph.time_dependent();
  Classification cls = classify_nodes(p, g.t0);

  std::vector<double> u(static_cast<std::size_t>(total), 0.0);
  for (std::int64_t f : cls.active) {
    const Vec x = g.coord(g.unflatten(f));
    u[static_cast<std::size_t>(f)] = p.dirichlet(x, g.t0);
  }

  GridFunction out;
  out.grid = g;
  out.status = cls.status;
  out.stride = std::max(1, opt.store_stride);

  const auto store = [&](int m, double t) {
    if (opt.store_stride == 0 && m != g.steps) return;
    if (m % out.stride != 0 && m != g.steps) return;
    out.times.push_back(t);
    out.slice_index.push_back(m);
    out.slices.push_back(u);
  };

  const auto observe = [&](int m, double t) {
    SliceView view{m, t, u, cls, g};
    for (const auto& ob : opt.observers) ob(view);
  };

  store(0, g.t0);
  observe(0, g.t0);

  for (int m = 1; m <= g.steps; ++m) {
    const double t = g.time_of(m);
    if (time_dep) {
      Classification next = classify_nodes(p, t);
      // emerging nodes take the lateral Dirichlet value at the previous time
      for (std::int64_t f : next.active) {
        if (cls.status[static_cast<std::size_t>(f)] == NodeStatus::exterior) {
          const Vec x = g.coord(g.unflatten(f));
          u[static_cast<std::size_t>(f)] = p.dirichlet(x, t - g.tau);
        }
      }
      cls = std::move(next);
      out.status = cls.status;  // last classification wins for the stored mask
    }
    u = step(p, cls, u, t, opt);
    store(m, t);
    observe(m, t);
  }
  return out;
}

double interpolate_slice_values(const GridSpec& g, const std::vector<NodeStatus>& status,
                                const std::vector<double>& values, const Vec& x) {
  const int n = g.n;
  std::array<int, 3> base{};
  std::array<double, 3> w{};
  for (int i = 0; i < n; ++i) {
    const double rel = (x[i] - g.origin[i]) / g.h;
    int b = static_cast<int>(std::floor(rel));
    double wi = rel - b;
    if (b < 0) {
      b = 0;
      wi = 0;
    }
    if (b > g.counts[i] - 2) {
      b = g.counts[i] - 2;
      wi = 1;
    }
    base[i] = b;
    w[i] = wi;
  }
  double acc = 0, wsum = 0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> idx = base;
    double cw = 1;
    for (int i = 0; i < n; ++i) {
      const int bit = (c >> i) & 1;
      idx[i] += bit;
      cw *= bit ? w[i] : 1.0 - w[i];
    }
    if (cw == 0.0) continue;
    const std::int64_t f = g.flatten(idx);
    if (status[static_cast<std::size_t>(f)] == NodeStatus::exterior) continue;
    acc += cw * values[static_cast<std::size_t>(f)];
    wsum += cw;
  }
  return wsum > 0 ? acc / wsum : 0.0;
}

double interpolate_slice_with_boundary(const GridSpec& g, const std::vector<NodeStatus>& status,
                                       const std::vector<double>& values, const Vec& x,
                                       const std::function<double(const Vec&, double)>& bc,
                                       double t) {
  const int n = g.n;
  std::array<int, 3> base{};
  std::array<double, 3> w{};
  for (int i = 0; i < n; ++i) {
    const double rel = (x[i] - g.origin[i]) / g.h;
    int b = static_cast<int>(std::floor(rel));
    double wi = rel - b;
    if (b < 0) {
      b = 0;
      wi = 0;
    }
    if (b > g.counts[i] - 2) {
      b = g.counts[i] - 2;
      wi = 1;
    }
    base[i] = b;
    w[i] = wi;
  }
  double acc = 0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> idx = base;
    double cw = 1;
    for (int i = 0; i < n; ++i) {
      const int bit = (c >> i) & 1;
      idx[i] += bit;
      cw *= bit ? w[i] : 1.0 - w[i];
    }
    if (cw == 0.0) continue;
    const std::int64_t f = g.flatten(idx);
    if (status[static_cast<std::size_t>(f)] == NodeStatus::exterior)
      acc += cw * bc(g.coord(idx), t);
    else
      acc += cw * values[static_cast<std::size_t>(f)];
  }
  return acc;
}

double GridFunction::interpolate_slice(std::size_t slice, const Vec& x) const {
  return interpolate_slice_values(grid, status, slices[slice], x);
}

double GridFunction::interpolate(const Vec& x, double t) const {
  if (times.empty()) throw SolverError("GridFunction::interpolate: no stored slices");
  if (t <= times.front()) return interpolate_slice(0, x);
  if (t >= times.back()) return interpolate_slice(times.size() - 1, x);
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  if (w == 0.0) return interpolate_slice(lo, x);
  return (1.0 - w) * interpolate_slice(lo, x) + w * interpolate_slice(hi, x);
}

double GridFunction::sup_abs_over(const geometry::ParabolicCylinder& region) const {
  double best = 0;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (times[s] < region.center.t - region.r * region.r - 1e-12) continue;
    if (times[s] > region.center.t + 1e-12) continue;
    for (std::int64_t f = 0; f < grid.num_nodes(); ++f) {
      if (status[static_cast<std::size_t>(f)] == NodeStatus::exterior) continue;
      geometry::ParabolicPoint p{grid.coord(grid.unflatten(f)), times[s]};
      if (!region.contains_closure(p, grid.n)) continue;
      best = std::max(best, std::fabs(slices[s][static_cast<std::size_t>(f)]));
    }
  }
  return best;
}

void GridFunction::write_slab(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("write_slab: cannot open " + path);
  const char magic[8] = {'p', 'b', 's', 'l', 'a', 'b', '0', '1'};
  os.write(magic, 8);
  const auto w64 = [&](std::int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  const auto wd = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  w64(grid.n);
  for (int i = 0; i < 3; ++i) w64(grid.counts[i]);
  wd(grid.h);
  wd(grid.tau);
  for (int i = 0; i < 3; ++i) wd(grid.origin[i]);
  wd(grid.t0);
  w64(grid.steps);
  for (int i = 0; i < 3; ++i) wd(grid.cyl.center.x[i]);
  wd(grid.cyl.center.t);
  wd(grid.cyl.r);
  w64(stride);
  w64(static_cast<std::int64_t>(slices.size()));
  os.write(reinterpret_cast<const char*>(status.data()), static_cast<std::streamsize>(status.size()));
  for (std::size_t s = 0; s < slices.size(); ++s) {
    wd(times[s]);
    w64(slice_index[s]);
    os.write(reinterpret_cast<const char*>(slices[s].data()),
             static_cast<std::streamsize>(slices[s].size() * 8));
  }
}

GridFunction GridFunction::read_slab(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("read_slab: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (std::memcmp(magic, "pbslab01", 8) != 0) throw ConfigError("read_slab: bad magic");
  const auto r64 = [&]() {
    std::int64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const auto rd = [&]() {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  GridFunction out;
  out.grid.n = static_cast<int>(r64());
  for (int i = 0; i < 3; ++i) out.grid.counts[i] = static_cast<int>(r64());
  out.grid.h = rd();
  out.grid.tau = rd();
  for (int i = 0; i < 3; ++i) out.grid.origin[i] = rd();
  out.grid.t0 = rd();
  out.grid.steps = static_cast<int>(r64());
  for (int i = 0; i < 3; ++i) out.grid.cyl.center.x[i] = rd();
  out.grid.cyl.center.t = rd();
  out.grid.cyl.r = rd();
  out.stride = static_cast<int>(r64());
  const std::int64_t nslices = r64();
  out.status.resize(static_cast<std::size_t>(out.grid.num_nodes()));
  is.read(reinterpret_cast<char*>(out.status.data()),
          static_cast<std::streamsize>(out.status.size()));
  for (std::int64_t s = 0; s < nslices; ++s) {
    out.times.push_back(rd());
    out.slice_index.push_back(static_cast<int>(r64()));
    std::vector<double> v(static_cast<std::size_t>(out.grid.num_nodes()));
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
    out.slices.push_back(std::move(v));
  }
  return out;
}

void GridFunction::write_csv_slice(const std::string& path, std::size_t slice) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("write_csv_slice: cannot open " + path);
  os << "# t=" << times[slice] << "\n";
  const int n = grid.n;
  os << (n == 3 ? "x0,x1,x2,value\n" : (n == 2 ? "x0,x1,value\n" : "x0,value\n"));
  char buf[256];
  for (std::int64_t f = 0; f < grid.num_nodes(); ++f) {
    if (status[static_cast<std::size_t>(f)] == NodeStatus::exterior) continue;
    const Vec x = grid.coord(grid.unflatten(f));
    int len = 0;
    for (int i = 0; i < n; ++i)
      len += std::snprintf(buf + len, sizeof(buf) - len, "%.17g,", x[i]);
    std::snprintf(buf + len, sizeof(buf) - len, "%.17g", slices[slice][static_cast<std::size_t>(f)]);
    os << buf << "\n";
  }
}

SandwichReport special_solution(const regdist::RegularizedDistanceField& field,
                                const ParabolicProblem& tmpl, double r, double C0,
                                double d_floor_cells, int store_stride) {
  if (!(r > 0 && r < 1.0 / 3.0))
    throw ConfigError("special_solution: r must lie in (0, 1/3)");
  const auto& dom = field.domain();
  const int n = dom.n;

  SandwichReport rep;
  rep.r = r;
  geometry::ThinCylinder q2r;
  q2r.r = 2 * r;
  rep.seminorm = geometry::local_seminorm(dom.graph, q2r, n);
  rep.eps = C0 * rep.seminorm;
  if (rep.eps >= 0.5) throw ContractError("special_solution: eps = C0*seminorm >= 1/2");

  ParabolicProblem prob = tmpl;
  prob.domain = dom;
  prob.source = [](const Vec&, double) { return 0.0; };
  prob.grid = GridSpec::make(n, geometry::ParabolicCylinder{geometry::ParabolicPoint{}, r},
                             tmpl.grid.h, tmpl.grid.tau);

  const bool static_d = !dom.graph.time_dependent();
  // Time-independent graphs give a time-independent d. Precompute d at every
  // node and cut position once so the Dirichlet callback is read-only (it is
  // invoked from parallel assembly loops).
  std::unordered_map<std::int64_t, double> cache;
  const double key_scale = 1.0 / (kAlphaFloor * prob.grid.h);
  const auto pos_key = [&, n](const Vec& x) {
    std::int64_t key = 0;
    for (int i = 0; i < n; ++i)
      key = key * 1000003 + static_cast<std::int64_t>(std::llround(x[i] * key_scale));
    return key;
  };
  if (static_d) {
    prob.dirichlet = [](const Vec&, double) { return 0.0; };  // placeholder for classify
    Classification cls0 = classify_nodes(prob, prob.grid.t0);
    std::vector<Vec> positions;
    for (std::int64_t f : cls0.active) positions.push_back(prob.grid.coord(prob.grid.unflatten(f)));
    for (const auto& [node, arms] : cls0.arms)
      for (const auto& arm : arms)
        if (arm.cut) positions.push_back(arm.cut_point);
    std::vector<double> dvals(positions.size());
    par::for_each(static_cast<std::int64_t>(positions.size()), [&](std::int64_t i) {
      dvals[static_cast<std::size_t>(i)] =
          field.distance_or_zero(geometry::ParabolicPoint{positions[static_cast<std::size_t>(i)], 0.0});
    });
    for (std::size_t i = 0; i < positions.size(); ++i) cache.emplace(pos_key(positions[i]), dvals[i]);
  }
  prob.dirichlet = [&field, &cache, pos_key, static_d](const Vec& x, double t) {
    if (static_d) {
      const auto it = cache.find(pos_key(x));
      if (it != cache.end()) return it->second;
    }
    return field.distance_or_zero(geometry::ParabolicPoint{x, t});
  };

  SolveOptions opt;
  opt.store_stride = store_stride;
  rep.phi = solve(prob, opt);

  // Sandwich with one grid-cell of d-variation as tolerance.
  const double h = prob.grid.h;
  const double d_floor = d_floor_cells * h;
  const double two_r = 2 * r;
  std::vector<double> dcache(static_cast<std::size_t>(prob.grid.num_nodes()), -1.0);
  rep.worst_low = rep.worst_high = 0;
  for (std::size_t s = 0; s < rep.phi.slices.size(); ++s) {
    const double t = rep.phi.times[s];
    for (std::int64_t f = 0; f < prob.grid.num_nodes(); ++f) {
      if (rep.phi.status[static_cast<std::size_t>(f)] == NodeStatus::exterior) continue;
      const Vec x = prob.grid.coord(prob.grid.unflatten(f));
      double d;
      if (static_d && dcache[static_cast<std::size_t>(f)] >= 0) {
        d = dcache[static_cast<std::size_t>(f)];
      } else {
        d = prob.dirichlet(x, t);  // cached for static graphs
        if (static_d) dcache[static_cast<std::size_t>(f)] = d;
      }
      const double phi = rep.phi.slices[s][static_cast<std::size_t>(f)];
      rep.sup_diff = std::max(rep.sup_diff, std::fabs(phi - d));
      if (d <= d_floor) continue;
      ++rep.checked;
      const auto lower = [&](double dd) {
        return std::pow(two_r, -rep.eps) * std::pow(std::max(dd, 0.0), 1 + rep.eps);
      };
      const auto upper = [&](double dd) {
        return std::pow(two_r, rep.eps) * std::pow(std::max(dd, 0.0), 1 - rep.eps);
      };
      const double lo = lower(d), hi = upper(d);
      const double tol_lo = lo - lower(d - h);
      const double tol_hi = upper(d + h) - hi;
      const double m_lo = phi - (lo - tol_lo);
      const double m_hi = (hi + tol_hi) - phi;
      if (m_lo < rep.worst_low) rep.worst_low = m_lo;
      if (m_hi < rep.worst_high) rep.worst_high = m_hi;
      if (m_lo < 0 || m_hi < 0) ++rep.violations;
    }
  }
  rep.K = rep.seminorm > 0 ? rep.sup_diff / (r * rep.seminorm) : 0.0;
  return rep;
}

AbpktResult abpkt_check(const GridFunction& u, const ParabolicProblem& p) {
  AbpktResult res;
  const GridSpec& g = u.grid;
  const int n = g.n;
  double sup_u = -std::numeric_limits<double>::infinity();
  double sup_bdry = 0;  // u^+ on the boundary, so at least 0
  long double fsum = 0;
  const double cellv = std::pow(g.h, n);
  for (std::size_t s = 0; s < u.slices.size(); ++s) {
    const double t = u.times[s];
    const double wt = (s == 0) ? 0.0 : (u.times[s] - u.times[s - 1]);
    for (std::int64_t f = 0; f < g.num_nodes(); ++f) {
      if (u.status[static_cast<std::size_t>(f)] == NodeStatus::exterior) continue;
      const double v = u.slices[s][static_cast<std::size_t>(f)];
      sup_u = std::max(sup_u, v);
      const Vec x = g.coord(g.unflatten(f));
      if (wt > 0) fsum += std::pow(std::fabs(p.source(x, t)), n + 1) * cellv * wt;
    }
    if (s == 0) {
      // bottom of the cylinder belongs to the parabolic boundary
      for (std::int64_t f = 0; f < g.num_nodes(); ++f)
        if (u.status[static_cast<std::size_t>(f)] != NodeStatus::exterior)
          sup_bdry = std::max(sup_bdry, u.slices[s][static_cast<std::size_t>(f)]);
    } else {
      Classification cls = classify_nodes(p, t);
      for (const auto& [node, arms] : cls.arms)
        for (const auto& arm : arms)
          if (arm.cut) sup_bdry = std::max(sup_bdry, p.dirichlet(arm.cut_point, t));
    }
  }
  res.lhs = sup_u;
  res.boundary = sup_bdry;
  res.f_norm = static_cast<double>(std::pow(fsum, 1.0 / (n + 1)));
  const double denom = std::pow(g.cyl.r, static_cast<double>(n) / (n + 1)) * res.f_norm;
  res.fitted_C = denom > 0 ? std::max(0.0, res.lhs - res.boundary) / denom : 0.0;
  return res;
}

}  // namespace pblab::solver
