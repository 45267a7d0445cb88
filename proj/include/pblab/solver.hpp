#pragma once

#include <functional>
#include <unordered_map>

#include "pblab/barriers.hpp"
#include "pblab/common.hpp"
#include "pblab/geometry.hpp"
#include "pblab/regdist.hpp"

namespace pblab::solver {

enum class NodeStatus : std::uint8_t { exterior = 0, interior = 1, boundary_adjacent = 2 };

enum class Scheme { implicit_euler, explicit_euler };

// Uniform space-time grid over a parabolic cylinder. Spatial axes are aligned
// so the cylinder radius is an integer number of cells.
struct GridSpec {
  int n = 2;
  double h = 1.0 / 64;
  double tau = 1.0 / 4096;
  geometry::ParabolicCylinder cyl;
  std::array<int, 3> counts{1, 1, 1};
  std::array<double, 3> origin{};
  double t0 = 0;
  int steps = 0;

  static GridSpec make(int n, const geometry::ParabolicCylinder& cyl, double h, double tau);

  std::int64_t num_nodes() const {
    std::int64_t m = 1;
    for (int i = 0; i < n; ++i) m *= counts[i];
    return m;
  }
  std::int64_t flatten(const std::array<int, 3>& idx) const {
    std::int64_t f = idx[0];
    for (int i = 1; i < n; ++i) f = f * counts[i] + idx[i];
    return f;
  }
  std::array<int, 3> unflatten(std::int64_t flat) const {
    std::array<int, 3> idx{};
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(flat % counts[i]);
      flat /= counts[i];
    }
    return idx;
  }
  Vec coord(const std::array<int, 3>& idx) const {
    Vec x{};
    for (int i = 0; i < n; ++i) x[i] = origin[i] + idx[i] * h;
    return x;
  }
  double time_of(int m) const { return t0 + m * tau; }
};

// One stencil arm: effective length alpha * h; when cut, the Dirichlet value
// is sampled at cut_point on the parabolic boundary.
struct Arm {
  double alpha = 1.0;
  bool cut = false;
  Vec cut_point{};
};

struct Classification {
  double t = 0;
  std::vector<NodeStatus> status;
  std::vector<std::int64_t> active;                          // flat indices, ascending
  std::unordered_map<std::int64_t, std::array<Arm, 6>> arms;  // boundary_adjacent only
  std::int64_t interior_count = 0;

  const Arm* arm(std::int64_t node, int axis, int dir) const {  // dir: 0 minus, 1 plus
    auto it = arms.find(node);
    if (it == arms.end()) return nullptr;
    return &it->second[static_cast<std::size_t>(2 * axis + dir)];
  }
};

struct CoefficientField {
  barriers::EllipticityPair ell;
  bool constant = true;
  double A_const[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::function<void(const Vec&, double, double*)> eval_fn;  // writes row-major n x n
  std::optional<moduli::ModulusSpec> modulus;                // coefficient continuity

  static CoefficientField identity(double lambda = 1.0, double Lambda = 1.0);
  static CoefficientField constant_matrix(const double* A, int n, double lambda, double Lambda);
  static CoefficientField varying(std::function<void(const Vec&, double, double*)> fn,
                                  double lambda, double Lambda);

  void eval(const Vec& x, double t, int n, double* A) const;
  bool diagonal(int n) const;
};

// Scalar field on the grid; slices stored at a fixed stride (plus the final
// slice). Exterior nodes carry no value.
struct GridFunction {
  GridSpec grid;
  std::vector<NodeStatus> status;  // static-mask case; per-slice masks not stored
  int stride = 1;
  std::vector<double> times;
  std::vector<int> slice_index;
  std::vector<std::vector<double>> slices;

  double value(std::size_t slice, std::int64_t node) const { return slices[slice][node]; }
  bool active(std::int64_t node) const { return status[node] != NodeStatus::exterior; }

  // Multilinear in space over active cell corners (weights renormalized),
  // linear in time between stored slices.
  double interpolate(const Vec& x, double t) const;
  double interpolate_slice(std::size_t slice, const Vec& x) const;

  double sup_abs_over(const geometry::ParabolicCylinder& region) const;  // closure, grid nodes

  void write_slab(const std::string& path) const;
  static GridFunction read_slab(const std::string& path);
  void write_csv_slice(const std::string& path, std::size_t slice) const;
};

struct ParabolicProblem {
  geometry::ParabolicDomain domain;
  CoefficientField coeff;
  std::function<double(const Vec&, double)> source;     // f
  std::function<double(const Vec&, double)> dirichlet;  // g on the parabolic boundary
  GridSpec grid;
};

struct SliceView {
  int m;
  double t;
  const std::vector<double>& u;
  const Classification& cls;
  const GridSpec& grid;
};
using Observer = std::function<void(const SliceView&)>;

struct SolveOptions {
  Scheme scheme = Scheme::implicit_euler;
  double sor_omega = 1.5;
  double tol = 1e-10;
  int max_sweeps = 5000;
  int store_stride = 0;  // 0: store final slice only
  std::vector<Observer> observers;
  bool check_ellipticity = true;
};

// Multilinear interpolation over active cell corners with renormalized
// weights; 0 where no corner is active.
double interpolate_slice_values(const GridSpec& grid, const std::vector<NodeStatus>& status,
                                const std::vector<double>& values, const Vec& x);

// Same, but exterior corners take the Dirichlet value at their position, so
// queries inside a boundary cell honor the lateral data instead of being
// renormalized onto interior values.
double interpolate_slice_with_boundary(const GridSpec& grid, const std::vector<NodeStatus>& status,
                                       const std::vector<double>& values, const Vec& x,
                                       const std::function<double(const Vec&, double)>& g,
                                       double t);

Classification classify_nodes(const ParabolicProblem& p, double t);

// One time step (exposed for scheme tests); u sized num_nodes.
std::vector<double> step(const ParabolicProblem& p, const Classification& cls,
                         const std::vector<double>& u_prev, double t_new, const SolveOptions& opt);

GridFunction solve(const ParabolicProblem& p, const SolveOptions& opt = {});

struct SandwichReport {
  double r = 0, eps = 0, seminorm = 0;
  double sup_diff = 0;        // ||phi_r - d||_inf over checked nodes
  double K = 0;               // sup_diff / (r * seminorm)
  std::int64_t checked = 0;
  std::int64_t violations = 0;  // beyond one grid-cell of d-variation
  double worst_low = 0, worst_high = 0;  // most negative sandwich margins seen
  GridFunction phi;
  bool ok() const { return violations == 0; }
};

// Special solution with boundary data d on the parabolic boundary of
// Omega cap Q_r; checks the growth sandwich at interior nodes with d > d_floor.
SandwichReport special_solution(const regdist::RegularizedDistanceField& field,
                                const ParabolicProblem& tmpl, double r, double C0,
                                double d_floor_cells = 5.0, int store_stride = 4);

struct AbpktResult {
  double lhs = 0;       // sup over the cylinder of u
  double boundary = 0;  // sup over the parabolic boundary of u^+
  double f_norm = 0;    // discrete L^{n+1} norm of f
  double fitted_C = 0;  // (lhs - boundary)^+ / (r^{n/(n+1)} ||f||)
};

AbpktResult abpkt_check(const GridFunction& u, const ParabolicProblem& p);

}  // namespace pblab::solver
