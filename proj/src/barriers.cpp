#include "pblab/barriers.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace pblab::barriers {

namespace {

void check_and_symmetrize(const double* H, int n, double* S) {
  for (int i = 0; i < 9; ++i) S[i] = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(H[i * n + j] - H[j * n + i]) > 1e-12)
        throw ContractError("pucci: non-symmetric Hessian");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S[i * n + j] = 0.5 * (H[i * n + j] + H[j * n + i]);
}

}  // namespace

double pucci_minus(const double* H, int n, const EllipticityPair& ell) {
  double S[9];  // zeroed by check_and_symmetrize
  check_and_symmetrize(H, n, S);
  const auto e = linalg::sym_eigen(S, n);
  double acc = 0;
  for (int k = 0; k < n; ++k)
    acc += e.values[k] >= 0 ? ell.lambda * e.values[k] : ell.Lambda * e.values[k];
  return acc;
}

double pucci_plus(const double* H, int n, const EllipticityPair& ell) {
  double S[9];
  check_and_symmetrize(H, n, S);
  const auto e = linalg::sym_eigen(S, n);
  double acc = 0;
  for (int k = 0; k < n; ++k)
    acc += e.values[k] >= 0 ? ell.Lambda * e.values[k] : ell.lambda * e.values[k];
  return acc;
}

void pucci_minus_argmin(const double* H, int n, const EllipticityPair& ell, double* A_out) {
  double S[9];
  check_and_symmetrize(H, n, S);
  const auto e = linalg::sym_eigen(S, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double a = 0;
      for (int k = 0; k < n; ++k) {
        const double coef = e.values[k] >= 0 ? ell.lambda : ell.Lambda;
        a += coef * e.vecs[k][i] * e.vecs[k][j];
      }
      A_out[i * n + j] = a;
    }
}

BarrierSpec::BarrierSpec(double eps, BarrierSide s, double C0, double seminorm)
    : epsilon(eps), side(s) {
  if (!(eps > 0 && eps < 0.5)) throw ContractError("BarrierSpec: eps must lie in (0, 1/2)");
  if (eps < C0 * seminorm - 1e-15)
    throw ContractError("BarrierSpec: eps below C0 * seminorm at the working scale");
}

double barrier_residual_from(const regdist::DistanceDerivatives& der, int n, double eps,
                             BarrierSide side, const EllipticityPair& ell) {
  const double d = der.d;
  // d^{1 +/- eps}: time derivative (1 +/- eps) d^{+/-eps} dt d, Hessian
  // (1 +/- eps) [d^{+/-eps} D^2 d +/- eps d^{+/-eps - 1} grad grad^T].
  const double sgn = side == BarrierSide::sub ? 1.0 : -1.0;
  const double e = sgn * eps;
  const double pow_de = std::pow(d, e);
  const double coef = (1.0 + e);
  double Hb[9] = {0};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      Hb[i * n + j] =
          coef * (pow_de * der.hess[i][j] + e * pow_de / d * der.grad[i] * der.grad[j]);
  const double ut = coef * pow_de * der.dt;
  if (side == BarrierSide::sub) return ut - pucci_minus(Hb, n, ell);
  return ut - pucci_plus(Hb, n, ell);
}

double barrier_residual(const regdist::RegularizedDistanceField& field, const BarrierSpec& spec,
                        const geometry::ParabolicPoint& point, const EllipticityPair& ell) {
  const auto der = field.derivatives_of_d(point);
  return barrier_residual_from(der, field.domain().n, spec.epsilon, spec.side, ell);
}

std::vector<geometry::ParabolicPoint> sample_points(const geometry::ParabolicDomain& dom, double r,
                                                    int count, double d_floor, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 23);
  std::vector<geometry::ParabolicPoint> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const int n = dom.n;
  int guard = 0;
  while (static_cast<int>(pts.size()) < count && guard < count * 1000) {
    ++guard;
    geometry::ParabolicPoint p;
    for (int i = 0; i < n - 1; ++i) p.x[i] = r * rng.uniform(-1.0, 1.0);
    p.x[n - 1] = r * rng.uniform(-1.0, 1.0);
    p.t = -r * r * rng.uniform();
    if (norm_prime(p.x, n) >= r) continue;
    const double gap = p.x[n - 1] - dom.graph.eval(p.x, p.t, n);
    if (gap < d_floor) continue;
    pts.push_back(p);
  }
  if (static_cast<int>(pts.size()) < count)
    throw ConfigError("sample_points: domain/scale too thin for requested sample");
  return pts;
}

CalibrationResult calibrate_C0(const std::vector<CalibrationScale>& scales,
                               const EllipticityPair& ell, double residual_tol, double eps_cap) {
  CalibrationResult result;
  // Cache derivatives once; residuals are cheap per candidate eps.
  struct Cached {
    const CalibrationScale* sc;
    std::vector<regdist::DistanceDerivatives> ders;
  };
  std::vector<Cached> cache;
  for (const auto& sc : scales) {
    Cached c{&sc, {}};
    c.ders.resize(sc.points.size());
    par::for_each(static_cast<std::int64_t>(sc.points.size()), [&](std::int64_t i) {
      c.ders[static_cast<std::size_t>(i)] =
          sc.field->derivatives_of_d(sc.points[static_cast<std::size_t>(i)]);
    });
    cache.push_back(std::move(c));
  }

  const auto admissible = [&](double C0) {
    for (const auto& c : cache) {
      const double s = c.sc->seminorm;
      if (s <= 0) continue;  // flat scale: eps = 0, residuals vanish identically
      const double eps = C0 * s;
      if (eps >= eps_cap) return false;
      const int n = c.sc->field->domain().n;
      bool ok = true;
      for (const auto& der : c.ders) {
        if (barrier_residual_from(der, n, eps, BarrierSide::sub, ell) > residual_tol ||
            barrier_residual_from(der, n, eps, BarrierSide::super, ell) < -residual_tol) {
          ok = false;
          break;
        }
      }
      if (!ok) return false;
    }
    return true;
  };

  // The eps < 1/2 cap makes admissibility false again for huge C0, so scan
  // upward for a bracket before bisecting.
  double lo = 0.1, hi = 0.0;
  if (admissible(lo)) {
    result.C0 = lo;
    result.ok = true;
  } else {
    for (double c = 0.13; c <= 1000.0; c *= 1.3) {
      if (admissible(c)) {
        hi = c;
        break;
      }
      lo = c;
    }
    if (hi == 0.0) {
      result.ok = false;  // calibration failure: no admissible C0 in range
    } else {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(mid))
          hi = mid;
        else
          lo = mid;
      }
      result.C0 = hi;
      result.ok = true;
    }
  }

  // Per-scale report: minimal working eps and the implied per-scale C0.
  for (const auto& c : cache) {
    CalibrationRow row;
    row.domain = c.sc->domain_name;
    row.scale = c.sc->r;
    row.seminorm = c.sc->seminorm;
    if (c.sc->seminorm <= 0) {
      row.min_eps = 0;
      row.implied_C0 = 0;
    } else {
      const int n = c.sc->field->domain().n;
      double elo = 1e-6, ehi = eps_cap;
      const auto eps_ok = [&](double eps) {
        for (const auto& der : c.ders)
          if (barrier_residual_from(der, n, eps, BarrierSide::sub, ell) > residual_tol ||
              barrier_residual_from(der, n, eps, BarrierSide::super, ell) < -residual_tol)
            return false;
        return true;
      };
      if (eps_ok(elo)) {
        row.min_eps = elo;
      } else if (!eps_ok(ehi)) {
        row.min_eps = std::numeric_limits<double>::quiet_NaN();
      } else {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (elo + ehi);
          if (eps_ok(mid))
            ehi = mid;
          else
            elo = mid;
        }
        row.min_eps = ehi;
      }
      row.implied_C0 = row.min_eps / c.sc->seminorm;
    }
    result.rows.push_back(row);
  }
  return result;
}

void CalibrationResult::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("CalibrationResult::write_csv: cannot open " + path);
  os << "domain,scale,seminorm,min_eps,implied_C0\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g", r.domain.c_str(), r.scale,
                  r.seminorm, r.min_eps, r.implied_C0);
    os << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "global,,,,%.17g", C0);
  os << buf << "\n";
}

}  // namespace pblab::barriers
