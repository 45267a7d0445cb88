#pragma once

#include <optional>

#include "pblab/common.hpp"
#include "pblab/moduli.hpp"

namespace pblab::geometry {

struct ParabolicPoint {
  Vec x{};
  double t = 0;
};

double parabolic_distance(const ParabolicPoint& p, const ParabolicPoint& q, int n);

// Q_r(x,t) = B'_r(x') x (x_n - r, x_n + r) x (t - r^2, t)
struct ParabolicCylinder {
  ParabolicPoint center;
  double r = 1.0;

  bool contains(const ParabolicPoint& p, int n) const;          // open
  bool contains_closure(const ParabolicPoint& p, int n) const;  // closed (sup extraction)
};

enum class GraphFamily { flat, cone, radial_profile, time_wave, custom };

// Lateral boundary graph Gamma on B'_R x [-R^2, 0], Gamma(0,0) = 0, with a
// declared parabolic Lipschitz constant L. Analytic families evaluate outside
// the patch as well (their formulas are global); custom sampled graphs do not.
struct BoundaryGraph {
  GraphFamily family = GraphFamily::flat;
  double R = 1.0;
  double L = 0.0;
  double offset = 0.0;  // vertical shift (interior-box problems place the graph far below)
  moduli::ModulusSpec omega;  // radial_profile
  double sign = 1.0;          // radial_profile orientation
  double amplitude = 0.0;     // time_wave
  double frequency = 1.0;     // time_wave (parabolic: argument is sqrt|t|)

  // custom: bilinear interpolation on (x', sigma) with sigma = sqrt(-t)
  std::vector<double> grid_xp, grid_sigma;
  std::vector<double> grid_vals;  // row-major [sigma][xp]
  bool strict_patch = false;      // custom graphs cannot extrapolate

  double eval(const Vec& xprime, double t, int n) const;
  bool time_dependent() const { return family == GraphFamily::time_wave || family == GraphFamily::custom; }

  static BoundaryGraph flat_graph(double R = 1.0);
  static BoundaryGraph cone_graph(double L, double R = 1.0);
  static BoundaryGraph radial(const moduli::ModulusSpec& omega, double L, double R = 1.0,
                              double sign = 1.0);
  static BoundaryGraph wave(double amplitude, double frequency, double R = 1.0);
};

struct ParabolicDomain {
  BoundaryGraph graph;
  double R = 1.0;
  int n = 2;

  bool contains(const ParabolicPoint& p) const;  // p in Q_R and x_n > Gamma(x', t)
};

double vertical_gap(const ParabolicDomain& dom, const ParabolicPoint& p);

// inf d_p(p, lateral boundary), sampled minimization with 3+ refinement
// rounds around the running argmin.
double lateral_boundary_distance(const ParabolicDomain& dom, const ParabolicPoint& p);

// Thin-cylinder Q'_r(x',t) = B'_r(x') x (t - r^2, t) over which the local
// parabolic Lipschitz seminorm of the graph is estimated.
struct ThinCylinder {
  Vec xprime{};
  double t = 0;
  double r = 1.0;
};

// Stratified random pairs (fixed seed) plus deterministic near-diagonal and
// through-center pairs; max of |dGamma| / d_p over pairs.
double local_seminorm(const BoundaryGraph& graph, const ThinCylinder& q, int n,
                      int samples = 10000, std::uint64_t seed = 0x5eed);

struct SamplingGrid {
  int per_axis = 33;
};

struct C1CheckResult {
  bool holds = true;
  ParabolicPoint witness{};  // graph-space point (x', 0.., t) on failure
  double margin = 0;         // min over samples of bound - Gamma (interior case)

  std::string witness_csv_row() const;  // "x0,x1,x2,t,margin"
};

C1CheckResult check_interior_C1(const ParabolicDomain& dom, const moduli::ModulusSpec& omega,
                                double eta0, const SamplingGrid& grid);
C1CheckResult check_exterior_C1(const ParabolicDomain& dom, const moduli::ModulusSpec& omega,
                                double eta0, const SamplingGrid& grid);

}  // namespace pblab::geometry
