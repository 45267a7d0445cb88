#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pblab/common.hpp"

namespace pblab::moduli {

enum class Family { power, log_inverse, scaled_power, tabulated };

enum class DiniVerdict { dini, not_dini, inconclusive };
enum class DoubleDiniVerdict { yes, no, inconclusive };

// A modulus of continuity omega on [0, eta0): continuous, increasing,
// omega(0) = 0. Analytic families plus a tabulated form (monotone linear
// interpolation after an envelope pass).
struct ModulusSpec {
  Family family = Family::power;
  double alpha = 1.0;   // power / scaled_power exponent
  double kappa = 1.0;   // scale for log_inverse / scaled_power
  double log_pow = 1.0; // log_inverse: omega(s) = kappa / log(e/s)^log_pow
  double eta0 = 1.0;
  std::vector<double> tab_s, tab_v;  // tabulated samples (sorted s, envelope applied)

  static ModulusSpec power_law(double a, double eta0 = 1.0);
  static ModulusSpec log_inverse_law(double k, double eta0 = 1.0, double p = 1.0);
  static ModulusSpec scaled_power_law(double k, double a, double eta0 = 1.0);
  static ModulusSpec tabulated_from(std::vector<double> s, std::vector<double> v, double eta0);
  static ModulusSpec zero(double eta0 = 1.0);  // tabulated all-zero modulus

  bool is_zero() const;
};

// Measured modulus: (scale, value) samples with the monotone envelope applied.
struct SampledModulus {
  std::vector<double> scales;
  std::vector<double> values;

  double eval(double s) const;                 // monotone linear interpolation, (0,0) prepended
  ModulusSpec as_spec(double eta0 = 0) const;  // tabulated ModulusSpec view
  void write_csv(const std::string& path) const;  // two columns: scale, value
};

double eval_modulus(const ModulusSpec& omega, double s);

// Dense-sample check of the modulus axioms (eval(0)=0, strict increase on a
// 10^3-point grid). Tabulated all-zero moduli are exempt from strictness.
bool check_modulus_axioms(const ModulusSpec& omega, std::string* why = nullptr);

// Integral of omega(s)/s over [a, b], adaptive Simpson after log substitution.
double dini_integral(const ModulusSpec& omega, double a, double b);

DiniVerdict is_dini(const ModulusSpec& omega);
DoubleDiniVerdict is_double_dini(const ModulusSpec& omega);

// theta -> theta * (a + int_theta^b omega1 ds/s) * exp(c * int_theta^b omega2 ds/s),
// returned as a tabulated modulus on (0, b].
ModulusSpec tilde_omega(double a, double b, double c, const ModulusSpec& omega1,
                        const ModulusSpec& omega2);

// Pointwise sum, tabulated on a log grid (used for omega_f + omega_g factors).
ModulusSpec sum_moduli(const ModulusSpec& a, const ModulusSpec& b, double eta0);

}  // namespace pblab::moduli
