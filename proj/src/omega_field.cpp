#include "pblab/omega_field.hpp"

#include <algorithm>
#include <cmath>

namespace pblab::moduli {

SampledModulus omega_f_from_field(const solver::GridFunction& f, const std::vector<double>& radii,
                                  int center_stride_space, int center_stride_time) {
  const auto& g = f.grid;
  const int n = g.n;
  const double h = g.h;
  for (double r : radii)
    if (r < 4.0 * h - 1e-12)
      throw ResolutionError("omega_f_from_field: radius below 4 grid spacings");

  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  const double cellv = std::pow(h, n);

  // Per stored slice, |f|^{n+1} * dV with the trailing time weight.
  std::vector<std::vector<double>> pw(f.slices.size());
  for (std::size_t s = 0; s < f.slices.size(); ++s) {
    pw[s].assign(static_cast<std::size_t>(g.num_nodes()), 0.0);
    const double wt = s == 0 ? 0.0 : (f.times[s] - f.times[s - 1]);
    if (wt <= 0) continue;
    par::for_each(g.num_nodes(), [&](std::int64_t node) {
      if (!f.active(node)) return;
      const double v = std::fabs(f.slices[s][static_cast<std::size_t>(node)]);
      pw[s][static_cast<std::size_t>(node)] = std::pow(v, n + 1) * cellv * wt;
    });
  }

  SampledModulus out;
  for (double r : sorted) {
    const int kr = static_cast<int>(std::floor(r / h + 1e-9));
    double best = 0;
    for (std::size_t sc = 0; sc < f.slices.size(); sc += static_cast<std::size_t>(center_stride_time)) {
      const double tc = f.times[sc];
      for (std::int64_t fc = 0; fc < g.num_nodes(); ++fc) {
        if (!f.active(fc)) continue;
        const auto ci = g.unflatten(fc);
        bool strided = true;
        for (int i = 0; i < n; ++i)
          if (ci[i] % center_stride_space != 0) strided = false;
        if (!strided) continue;
        const Vec cx = g.coord(ci);
        double acc = 0;
        for (std::size_t s = 0; s <= sc; ++s) {
          if (f.times[s] <= tc - r * r - 1e-12) continue;
          // box sweep over |x_i - c_i| <= kr cells, ball test in x'
          std::array<int, 3> lo{}, hi{};
          for (int i = 0; i < n; ++i) {
            lo[i] = std::max(0, ci[i] - kr);
            hi[i] = std::min(g.counts[i] - 1, ci[i] + kr);
          }
          std::array<int, 3> idx = lo;
          for (;;) {
            const std::int64_t node = g.flatten(idx);
            if (pw[s][static_cast<std::size_t>(node)] > 0) {
              const Vec x = g.coord(idx);
              Vec d{};
              for (int i = 0; i < n; ++i) d[i] = x[i] - cx[i];
              if (norm_prime(d, n) < r && std::fabs(d[n - 1]) < r)
                acc += pw[s][static_cast<std::size_t>(node)];
            }
            int axis = n - 1;
            for (;;) {
              if (++idx[axis] <= hi[axis]) break;
              idx[axis] = lo[axis];
              if (--axis < 0) break;
            }
            if (axis < 0) break;
          }
        }
        best = std::max(best, std::pow(r, -1.0 / (n + 1)) * std::pow(acc, 1.0 / (n + 1)));
      }
    }
    out.scales.push_back(r);
    out.values.push_back(best);
  }
  for (std::size_t i = 1; i < out.values.size(); ++i)
    out.values[i] = std::max(out.values[i], out.values[i - 1]);
  return out;
}

}  // namespace pblab::moduli
