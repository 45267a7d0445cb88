#include "pblab/common.hpp"

#include <map>
#include <mutex>

namespace pblab {
namespace quad {

namespace {

double simpson(double fa, double fm, double fb, double h) { return (fa + 4.0 * fm + fb) * (h / 6.0); }

double adapt(const std::function<double(double)>& f, double a, double m, double b, double fa,
             double fm, double fb, double whole, double tol, std::int64_t& budget) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  budget -= 2;
  if (budget <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, budget) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, budget);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        std::int64_t max_intervals) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  // Anchor the tolerance on a coarse estimate of int |f| so symmetric
  // integrands do not produce a spuriously tiny target.
  double rough = 0;
  for (int i = 0; i < 16; ++i) rough += std::fabs(f(a + (b - a) * (i + 0.5) / 16.0));
  rough *= std::fabs(b - a) / 16.0;
  const double tol = rel_tol * std::max({std::fabs(whole), rough, 1e-300});
  std::int64_t budget = max_intervals;
  return adapt(f, a, m, b, fa, fm, fb, whole, tol, budget);
}

namespace {

struct GlRule {
  std::vector<double> nodes, weights;
};

GlRule make_gl(int order) {
  GlRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  // Newton iteration on Legendre P_n, Chebyshev initial guesses.
  for (int i = 0; i < order; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::map<int, GlRule>& gl_cache() {
  static std::map<int, GlRule> cache;
  return cache;
}

std::mutex& gl_mutex() {
  static std::mutex m;
  return m;
}

const GlRule& gl_rule(int order) {
  std::lock_guard<std::mutex> lock(gl_mutex());
  auto it = gl_cache().find(order);
  if (it == gl_cache().end()) it = gl_cache().emplace(order, make_gl(order)).first;
  return it->second;
}

}  // namespace

const std::vector<double>& gl_nodes(int order) { return gl_rule(order).nodes; }
const std::vector<double>& gl_weights(int order) { return gl_rule(order).weights; }

}  // namespace quad

namespace linalg {

SymEigen sym_eigen(const double* a, int n) {
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = a[i * n + j];

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(m[p][q]) < 1e-300) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEigen out;
  std::array<int, 3> order = {0, 1, 2};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (m[order[j]][order[j]] < m[order[i]][order[i]]) std::swap(order[i], order[j]);
  for (int k = 0; k < n; ++k) {
    out.values[k] = m[order[k]][order[k]];
    for (int i = 0; i < n; ++i) out.vecs[k][i] = v[i][order[k]];
  }
  return out;
}

}  // namespace linalg
}  // namespace pblab
