#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pblab/harness.hpp"

using namespace pblab;

TEST_CASE("geometric tail sum agrees with an extended-precision truncation") {
  for (int n : {2, 3}) {
    for (double c : {0.25, 1.0}) {
      const double fast = harness::green_geometric_tail(n, c);
      long double acc = 0.0L, comp = 0.0L;
      const long double p = (static_cast<long double>(n) * n + 1) / (n + 1);
      for (int m = 1; m <= 40; ++m) {
        // Kahan-compensated 40-term truncation in long double
        const long double term =
            std::exp(p * m * std::log(2.0L) - static_cast<long double>(c) * std::exp2(2.0L * m));
        const long double y = term - comp;
        const long double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
      }
      CHECK(fast == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
    }
  }
}

TEST_CASE("green bound vanishes for a zero source modulus") {
  geometry::ParabolicPoint a, b;
  b.x[0] = 1.0 / 64;
  CHECK(harness::dyadic_green_bound(a, b, 2, moduli::ModulusSpec::zero(4.0), 0.25, 1.0) == 0.0);
  CHECK_THROWS_AS(harness::dyadic_green_bound(a, a, 2, moduli::ModulusSpec::zero(4.0), 0.25, 1.0),
                  ConfigError);
}

TEST_CASE("green bound dominates the direct-quadrature oracle and tracks it") {
  const auto om = moduli::ModulusSpec::power_law(1.0, 4.0);
  double lo = 1e300, hi = 0;
  for (int j = 4; j <= 7; ++j) {
    const double r = std::ldexp(1.0, -j);
    geometry::ParabolicPoint a, b;
    b.x[0] = r;
    const double E = harness::dyadic_green_bound(a, b, 2, om, 0.25, 1.0);
    const double O = oracles::green_bound(a, b, 2, om, 0.25, 1.0);
    CHECK(E >= O * (1.0 - 1e-9));  // sup-bounds dominate the sharper quadrature
    lo = std::min(lo, E / O);
    hi = std::max(hi, E / O);
  }
  CHECK(hi <= 16.0);       // constant-factor slack of the chain, not unboundedness
  CHECK(hi / lo <= 1.5);   // and the slack is stable across scales
}

TEST_CASE("flat half-space anchors: hopf and upper-bound ratios are exactly one") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "flat";
  cfg.resolutions = {32};
  cfg.rho_min = 1.0 / 16;
  cfg.rho_max = 0.25;
  cfg.r_anchor = 0.25;

  SUBCASE("hopf") {
    cfg.data.kind = "vertical_gap";
    const auto rep = harness::run_hopf(cfg);
    CHECK(rep.pass);
    CHECK(rep.constant("C_res32") == doctest::Approx(1.0).epsilon(1e-8));
    for (const auto& row : rep.rows) CHECK(row.measured == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("upper bound") {
    cfg.data.kind = "linear_xn";
    cfg.source.kind = "zero";
    const auto rep = harness::run_upper_bound(cfg);
    CHECK(rep.pass);
    CHECK(rep.constant("C_res32") == doctest::Approx(1.0).epsilon(1e-8));
    for (const auto& row : rep.rows) CHECK(row.measured == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dyadic consistency is exactly zero on flat domains") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "flat";
  cfg.consistency_k_min = 2;
  cfg.consistency_k_max = 3;
  cfg.special_cells = 16;
  const auto rep = harness::run_dyadic_consistency(cfg);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) {
    CHECK(row.measured == 0.0);  // ||v - w|| bitwise zero
    CHECK(row.ratio == 0.0);
  }
}

TEST_CASE("almost positivity: nonnegative data never dips, empirical mu0 finite") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "cone";
  cfg.domain.L = 1.0 / 32;
  cfg.resolutions = {16};
  cfg.mu_probes = {0.0, 0.01};
  const auto rep = harness::run_almost_positivity(cfg);
  const double mu0 = rep.constant("mu0_res16");
  CHECK(mu0 >= 0.0);
  CHECK(std::isfinite(mu0));
  // the mu = 0 sweep entry must pass: u_plus/a >= 0 by the comparison principle
  bool found = false;
  for (const auto& row : rep.rows)
    if (row.scale == 0.0) {
      CHECK(row.measured == 1.0);
      found = true;
    }
  CHECK(found);
  CHECK_THROWS_AS([&] {
    harness::ExperimentConfig bad = cfg;
    bad.domain.L = 0.5;  // beyond the lemma's 1/16 hypothesis
    harness::run_almost_positivity(bad);
  }(), ConfigError);
}

TEST_CASE("boundary harnack: proportional solutions have zero quotient") {
  // u = 2v: the ratio field is constant, so its Holder quotient vanishes.
  using namespace solver;
  ParabolicProblem p;
  p.domain = geometry::ParabolicDomain{geometry::BoundaryGraph::cone_graph(0.05), 1.0, 2};
  p.coeff = CoefficientField::identity();
  p.source = [](const Vec&, double) { return 0.0; };
  p.dirichlet = [&](const Vec& x, double t) {
    return std::max(0.0, x[1] - p.domain.graph.eval(x, t, 2));
  };
  p.grid = GridSpec::make(2, geometry::ParabolicCylinder{geometry::ParabolicPoint{}, 1.0},
                          1.0 / 16, 1.0 / 256);
  SolveOptions opt;
  opt.store_stride = 64;
  const auto v = solve(p, opt);
  auto u = v;
  for (auto& s : u.slices)
    for (auto& val : s) val *= 2.0;
  double quot = 0;
  for (std::size_t s = 0; s < v.slices.size(); ++s)
    for (std::int64_t f = 0; f < p.grid.num_nodes(); ++f)
      if (v.active(f) && v.slices[s][static_cast<std::size_t>(f)] > 1e-10) {
        const double ratio = u.slices[s][static_cast<std::size_t>(f)] /
                             v.slices[s][static_cast<std::size_t>(f)];
        quot = std::max(quot, std::fabs(ratio - 2.0));
      }
  CHECK(quot <= 1e-12);
}

TEST_CASE("boundary harnack runner: bounded quotient, positive normalization") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "cone";
  cfg.domain.L = 0.05;
  cfg.resolutions = {16, 24};
  const auto rep = harness::run_boundary_harnack_ratio(cfg);
  CHECK(rep.pass);
  CHECK(rep.constant("v_probe_res16") > 0.1);
  CHECK(std::isfinite(rep.constant("quotient_res16")));
  CHECK(rep.constant("quotient_res24") > 0);
}

TEST_CASE("interior modulus with constant source: quadratic-range exponent") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.resolutions = {32};
  cfg.source.kind = "constant";
  cfg.source.value = 1.0;
  cfg.im_levels = 2;
  const auto rep = harness::run_interior_modulus(cfg);
  const double slope = rep.constant("slope_res32");
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.05);
}

TEST_CASE("dyadic consistency is invariant under kernel quadrature doubling") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "cone";
  cfg.domain.L = 0.02;
  cfg.C0 = 2.2;
  cfg.consistency_k_min = 2;
  cfg.consistency_k_max = 3;
  cfg.special_cells = 16;
  const auto a = harness::run_dyadic_consistency(cfg);
  cfg.quad_order = 32;
  const auto b = harness::run_dyadic_consistency(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(a.rows[i].ratio == doctest::Approx(b.rows[i].ratio).epsilon(1e-6));
}

TEST_CASE("constants solve the homogeneous problem") {
  using namespace solver;
  ParabolicProblem p;
  p.domain = geometry::ParabolicDomain{geometry::BoundaryGraph::cone_graph(0.05), 1.0, 2};
  p.coeff = CoefficientField::identity();
  p.source = [](const Vec&, double) { return 0.0; };
  p.dirichlet = [](const Vec&, double) { return 1.0; };
  p.grid = GridSpec::make(2, geometry::ParabolicCylinder{geometry::ParabolicPoint{}, 0.5},
                          0.5 / 8, 0.25 / 64);
  const auto u = solve(p, {});
  for (std::int64_t f = 0; f < p.grid.num_nodes(); ++f)
    if (u.active(f)) CHECK(u.slices.back()[static_cast<std::size_t>(f)] == 1.0);
}

TEST_CASE("upper bound on the flat half-space with constant source stays bounded") {
  harness::ExperimentConfig cfg;
  cfg.n = 2;
  cfg.domain.family = "flat";
  cfg.resolutions = {32};
  cfg.rho_min = 1.0 / 16;
  cfg.rho_max = 0.25;
  cfg.r_anchor = 0.25;
  cfg.source.kind = "constant";
  cfg.source.value = -1.0;
  cfg.data.kind = "zero";
  const auto rep = harness::run_upper_bound(cfg);
  CHECK(rep.pass);
  const double C = rep.constant("C_res32");
  CHECK(std::isfinite(C));
  CHECK(C > 0);
  for (const auto& row : rep.rows) CHECK(std::isfinite(row.measured));
}
