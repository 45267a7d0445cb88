#include <doctest.h>

#include <cmath>
#include <fstream>

#include "pblab/omega_field.hpp"

using namespace pblab;
using moduli::ModulusSpec;

TEST_CASE("modulus evaluation matches the closed forms") {
  const auto id = ModulusSpec::power_law(1.0);
  CHECK(moduli::eval_modulus(id, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(moduli::eval_modulus(id, 0.0) == 0.0);

  const auto li = ModulusSpec::log_inverse_law(1.0);
  // omega(e^-9) = 1 / log(e / e^-9) = 1/10
  CHECK(moduli::eval_modulus(li, std::exp(-9.0)) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(moduli::eval_modulus(li, 0.0) == 0.0);

  const auto sp = ModulusSpec::scaled_power_law(3.0, 0.5);
  CHECK(moduli::eval_modulus(sp, 0.25) == doctest::Approx(1.5).epsilon(1e-14));

  CHECK(moduli::eval_modulus(ModulusSpec::zero(), 0.7) == 0.0);
  CHECK_THROWS_AS(moduli::eval_modulus(id, 1.5), std::domain_error);
  CHECK_THROWS_AS(moduli::eval_modulus(id, -0.1), std::domain_error);
}

TEST_CASE("modulus axioms hold on dense samples") {
  std::string why;
  CHECK(moduli::check_modulus_axioms(ModulusSpec::power_law(0.5), &why));
  CHECK(moduli::check_modulus_axioms(ModulusSpec::log_inverse_law(0.3), &why));
  CHECK(moduli::check_modulus_axioms(ModulusSpec::zero(), &why));
  // non-monotone tabulated data is repaired by the envelope
  const auto tab = ModulusSpec::tabulated_from({0.1, 0.2, 0.3}, {0.5, 0.1, 0.9}, 0.3);
  CHECK(tab.tab_v[1] == 0.5);
}

TEST_CASE("dini_integral reproduces closed-form antiderivatives") {
  // power: int_a^b s^alpha ds/s = (b^alpha - a^alpha)/alpha
  const auto p = ModulusSpec::power_law(0.5);
  const double got = moduli::dini_integral(p, 1e-12, 1.0);
  CHECK(got == doctest::Approx((1.0 - std::pow(1e-12, 0.5)) / 0.5).epsilon(1e-7));

  CHECK(moduli::dini_integral(ModulusSpec::zero(), 1e-4, 0.5) == doctest::Approx(0.0));

  // log_inverse: antiderivative -log(log(e/s))
  const auto li = ModulusSpec::log_inverse_law(1.0);
  const double a = 1e-4, b = 1e-1;
  const double expected = std::log(1.0 - std::log(a)) - std::log(1.0 - std::log(b));
  CHECK(moduli::dini_integral(li, a, b) == doctest::Approx(expected).epsilon(1e-7));

  CHECK_THROWS_AS(moduli::dini_integral(p, 0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(moduli::dini_integral(p, -1.0, 0.5), std::domain_error);
}

TEST_CASE("dini_integral is additive over subintervals") {
  const auto li = ModulusSpec::log_inverse_law(0.7);
  const double pts[] = {1e-6, 1e-4, 1e-2, 0.3, 0.9};
  for (int i = 0; i + 2 < 5; ++i) {
    const double whole = moduli::dini_integral(li, pts[i], pts[i + 2]);
    const double split = moduli::dini_integral(li, pts[i], pts[i + 1]) +
                         moduli::dini_integral(li, pts[i + 1], pts[i + 2]);
    CHECK(whole == doctest::Approx(split).epsilon(1e-7));
  }
}

TEST_CASE("Dini classification") {
  CHECK(moduli::is_dini(ModulusSpec::power_law(0.5)) == moduli::DiniVerdict::dini);
  CHECK(moduli::is_dini(ModulusSpec::log_inverse_law(1.0)) == moduli::DiniVerdict::not_dini);
  CHECK(moduli::is_dini(ModulusSpec::zero()) == moduli::DiniVerdict::dini);
}

TEST_CASE("double Dini classification") {
  CHECK(moduli::is_double_dini(ModulusSpec::power_law(0.5)) == moduli::DoubleDiniVerdict::yes);
  CHECK(moduli::is_double_dini(ModulusSpec::log_inverse_law(1.0)) == moduli::DoubleDiniVerdict::no);
  // 1/log^3 is doubly Dini; 1/log^2 is Dini but not doubly
  CHECK(moduli::is_double_dini(ModulusSpec::log_inverse_law(1.0, 1.0, 3.0)) ==
        moduli::DoubleDiniVerdict::yes);
  CHECK(moduli::is_double_dini(ModulusSpec::log_inverse_law(1.0, 1.0, 2.0)) ==
        moduli::DoubleDiniVerdict::no);
}

TEST_CASE("tilde_omega transform") {
  const auto zero = ModulusSpec::zero();
  SUBCASE("identity when both integrals vanish") {
    const auto tw = moduli::tilde_omega(1.0, 1.0, 1.0, zero, zero);
    for (double theta : {1e-6, 1e-3, 0.1, 0.5})
      CHECK(moduli::eval_modulus(tw, theta) == doctest::Approx(theta).epsilon(1e-9));
  }
  SUBCASE("a=0, omega1(s)=s gives theta (1 - theta)") {
    const auto lin = ModulusSpec::power_law(1.0);
    const auto tw = moduli::tilde_omega(0.0, 1.0, 1.0, lin, zero);
    for (double theta : {0.01, 0.1, 0.3})
      CHECK(moduli::eval_modulus(tw, theta) == doctest::Approx(theta * (1.0 - theta)).epsilon(1e-4));
  }
  SUBCASE("result is a modulus near zero: increasing and vanishing") {
    const auto om = ModulusSpec::log_inverse_law(0.3);
    const auto tw = moduli::tilde_omega(1.0, 0.5, 2.0, om, om);
    double prev = 0;
    for (int j = 30; j >= 5; --j) {
      const double theta = std::ldexp(0.5, -j);
      const double v = moduli::eval_modulus(tw, theta);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(moduli::eval_modulus(tw, std::ldexp(0.5, -30)) < 1e-6);
  }
}

namespace {

solver::GridFunction constant_field(int n, double value, int res, int tsteps) {
  solver::GridFunction f;
  geometry::ParabolicCylinder cyl{geometry::ParabolicPoint{}, 1.0};
  f.grid = solver::GridSpec::make(n, cyl, 1.0 / res, 1.0 / tsteps);
  f.status.assign(static_cast<std::size_t>(f.grid.num_nodes()), solver::NodeStatus::interior);
  f.stride = 1;
  for (int m = 0; m <= tsteps; ++m) {
    f.times.push_back(f.grid.time_of(m));
    f.slice_index.push_back(m);
    f.slices.emplace_back(static_cast<std::size_t>(f.grid.num_nodes()), value);
  }
  return f;
}

}  // namespace

TEST_CASE("omega_f_from_field: zero, constants, homogeneity") {
  SUBCASE("zero field") {
    auto f = constant_field(2, 0.0, 16, 32);
    const auto sm = moduli::omega_f_from_field(f, {0.25, 0.5}, 1, 4);
    for (double v : sm.values) CHECK(v == 0.0);
  }
  SUBCASE("f == 1, n = 1: cylinder volume 2r * r^2") {
    auto f = constant_field(1, 1.0, 32, 64);
    const auto sm = moduli::omega_f_from_field(f, {0.25, 0.5}, 1, 2);
    for (std::size_t i = 0; i < sm.scales.size(); ++i) {
      const double r = sm.scales[i];
      const double expected = std::pow(r, -0.5) * std::sqrt(2.0 * r * r * r);
      CHECK(sm.values[i] == doctest::Approx(expected).epsilon(0.15));
    }
  }
  SUBCASE("f == 1, n = 2: |Q_r| = 4 r^4") {
    auto f = constant_field(2, 1.0, 16, 64);
    const auto sm = moduli::omega_f_from_field(f, {0.5}, 1, 2);
    const double expected = std::pow(0.5, -1.0 / 3) * std::pow(4.0 * std::pow(0.5, 4), 1.0 / 3);
    CHECK(sm.values[0] == doctest::Approx(expected).epsilon(0.15));
  }
  SUBCASE("homogeneity: scaling f scales the values") {
    auto f1 = constant_field(2, 1.0, 16, 64);
    auto f3 = constant_field(2, 3.0, 16, 64);
    const auto a = moduli::omega_f_from_field(f1, {0.25, 0.5}, 2, 4);
    const auto b = moduli::omega_f_from_field(f3, {0.25, 0.5}, 2, 4);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]).epsilon(1e-12));
  }
  SUBCASE("radius below resolution is rejected") {
    auto f = constant_field(2, 1.0, 16, 32);
    CHECK_THROWS_AS(moduli::omega_f_from_field(f, {0.1}), ResolutionError);
  }
}

TEST_CASE("sampled modulus interpolation and envelope") {
  moduli::SampledModulus sm;
  sm.scales = {0.1, 0.2, 0.4};
  sm.values = {1.0, 2.0, 4.0};
  CHECK(sm.eval(0.0) == 0.0);
  CHECK(sm.eval(0.05) == doctest::Approx(0.5));
  CHECK(sm.eval(0.15) == doctest::Approx(1.5));
  CHECK(sm.eval(1.0) == doctest::Approx(4.0));
  const auto spec = sm.as_spec(0.5);
  CHECK(moduli::eval_modulus(spec, 0.15) == doctest::Approx(1.5));
}

TEST_CASE("sampled modulus csv serialization") {
  moduli::SampledModulus sm;
  sm.scales = {0.125, 0.25};
  sm.values = {0.3, 0.6};
  sm.write_csv("/tmp/pblab_sm.csv");
  std::ifstream is("/tmp/pblab_sm.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "scale,value");
  std::getline(is, line);
  CHECK(line.substr(0, 5) == "0.125");
}
