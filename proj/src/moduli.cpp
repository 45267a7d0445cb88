#include "pblab/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace pblab::moduli {

namespace {

void apply_envelope(std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::max(v[i], v[i - 1]);
}

double interp_tab(const std::vector<double>& s, const std::vector<double>& v, double x) {
  if (s.empty()) return 0.0;
  if (x <= 0.0) return 0.0;
  if (x <= s.front()) return v.front() * (x / s.front());  // linear through (0,0)
  if (x >= s.back()) return v.back();
  const auto it = std::upper_bound(s.begin(), s.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - s.begin());
  const double w = (x - s[i - 1]) / (s[i] - s[i - 1]);
  return v[i - 1] + w * (v[i] - v[i - 1]);
}

}  // namespace

ModulusSpec ModulusSpec::power_law(double a, double eta0) {
  ModulusSpec m;
  m.family = Family::power;
  m.alpha = a;
  m.eta0 = eta0;
  return m;
}

ModulusSpec ModulusSpec::log_inverse_law(double k, double eta0, double p) {
  ModulusSpec m;
  m.family = Family::log_inverse;
  m.kappa = k;
  m.log_pow = p;
  m.eta0 = eta0;
  return m;
}

ModulusSpec ModulusSpec::scaled_power_law(double k, double a, double eta0) {
  ModulusSpec m;
  m.family = Family::scaled_power;
  m.kappa = k;
  m.alpha = a;
  m.eta0 = eta0;
  return m;
}

ModulusSpec ModulusSpec::tabulated_from(std::vector<double> s, std::vector<double> v, double eta0) {
  ModulusSpec m;
  m.family = Family::tabulated;
  m.eta0 = eta0;
  m.tab_s = std::move(s);
  m.tab_v = std::move(v);
  apply_envelope(m.tab_v);
  return m;
}

ModulusSpec ModulusSpec::zero(double eta0) {
  return tabulated_from({eta0 * 0.5, eta0}, {0.0, 0.0}, eta0);
}

bool ModulusSpec::is_zero() const {
  if (family != Family::tabulated) return false;
  for (double v : tab_v)
    if (v != 0.0) return false;
  return true;
}

double SampledModulus::eval(double s) const { return interp_tab(scales, values, s); }

ModulusSpec SampledModulus::as_spec(double eta0) const {
  return ModulusSpec::tabulated_from(scales, values,
                                     eta0 > 0 ? eta0 : (scales.empty() ? 1.0 : scales.back()));
}

void SampledModulus::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("SampledModulus::write_csv: cannot open " + path);
  os << "scale,value\n";
  char buf[96];
  for (std::size_t i = 0; i < scales.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", scales[i], values[i]);
    os << buf << "\n";
  }
}

double eval_modulus(const ModulusSpec& omega, double s) {
  // Closed at eta0: the families are continuous there and integral transforms
  // evaluate the endpoint.
  if (s < 0.0 || s > omega.eta0 * (1.0 + 1e-12))
    throw std::domain_error("eval_modulus: s outside [0, eta0]");
  if (s == 0.0) return 0.0;
  switch (omega.family) {
    case Family::power:
      return omega.alpha == 0.5 ? std::sqrt(s) : std::pow(s, omega.alpha);
    case Family::log_inverse: {
      const double l = 1.0 - std::log(s);  // log(e/s)
      const double d = omega.log_pow == 1.0 ? l : std::pow(l, omega.log_pow);
      return omega.kappa / d;
    }
    case Family::scaled_power:
      return omega.kappa * std::pow(s, omega.alpha);
    case Family::tabulated:
      return interp_tab(omega.tab_s, omega.tab_v, s);
  }
  return 0.0;
}

bool check_modulus_axioms(const ModulusSpec& omega, std::string* why) {
  if (eval_modulus(omega, 0.0) != 0.0) {
    if (why) *why = "omega(0) != 0";
    return false;
  }
  if (omega.is_zero()) return true;  // measured all-zero moduli are admitted as degenerate
  const int kGrid = 1000;
  double prev = 0.0;
  for (int i = 1; i <= kGrid; ++i) {
    const double s = omega.eta0 * i / (kGrid + 1);
    const double v = eval_modulus(omega, s);
    if (!(v > prev)) {
      if (why) *why = "not strictly increasing at s=" + std::to_string(s);
      return false;
    }
    prev = v;
  }
  return true;
}

double dini_integral(const ModulusSpec& omega, double a, double b) {
  if (!(a > 0.0)) throw std::domain_error("dini_integral: lower limit must be positive");
  if (!(b > a)) throw std::domain_error("dini_integral: requires a < b");
  if (b > omega.eta0 * (1.0 + 1e-12)) throw std::domain_error("dini_integral: b beyond eta0");
  // int_a^b omega(s) ds/s = int_{log a}^{log b} omega(e^u) du
  return quad::adaptive_simpson([&](double u) { return eval_modulus(omega, std::exp(u)); },
                                std::log(a), std::log(b), 1e-8);
}

DiniVerdict is_dini(const ModulusSpec& omega) {
  const double eta = omega.eta0;
  // Increments delta_k = int_{2^-(k+1) eta}^{2^-k eta} omega ds/s, k = 4..40.
  std::vector<double> inc;
  for (int k = 4; k < 40; ++k) {
    const double hi = eta * std::ldexp(1.0, -k);
    const double lo = 0.5 * hi;
    inc.push_back(dini_integral(omega, lo, hi));
  }
  const double last = inc.back();
  if (last < 1e-6) return DiniVerdict::dini;
  double tail_min = last;
  for (std::size_t i = inc.size() - 10; i < inc.size(); ++i) tail_min = std::min(tail_min, inc[i]);
  if (tail_min > 1e-4) return DiniVerdict::not_dini;
  return DiniVerdict::inconclusive;
}

DoubleDiniVerdict is_double_dini(const ModulusSpec& omega) {
  // A divergent inner integral settles the question; otherwise the truncated
  // nested integral's decay rate is what decides.
  if (is_dini(omega) == DiniVerdict::not_dini) return DoubleDiniVerdict::no;
  const double eta = omega.eta0;
  const double floor_s = eta * std::ldexp(1.0, -45);
  const auto inner = [&](double xi) { return dini_integral(omega, floor_s, xi); };
  // Outer increments J_k = int over xi in [2^-(k+1), 2^-k] of W(xi) dxi/xi.
  std::vector<double> k_vals, inc;
  for (int k = 4; k <= 40; k += 2) {
    const double hi = eta * std::ldexp(1.0, -k);
    const double lo = 0.5 * hi;
    const double j = quad::adaptive_simpson([&](double u) { return inner(std::exp(u)); },
                                            std::log(lo), std::log(hi), 1e-7);
    k_vals.push_back(static_cast<double>(k));
    inc.push_back(j);
  }
  if (inc.back() < 1e-9) return DoubleDiniVerdict::yes;  // geometric-type decay already converged
  // Rate regression: increments ~ k^-p; sum converges iff p > 1.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (k_vals[i] < 8 || inc[i] <= 0) continue;
    const double x = std::log(k_vals[i]);
    const double y = std::log(inc[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 4) return DoubleDiniVerdict::inconclusive;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double p = -slope;
  if (p >= 1.5) return DoubleDiniVerdict::yes;
  if (p <= 1.15) return DoubleDiniVerdict::no;
  return DoubleDiniVerdict::inconclusive;
}

ModulusSpec tilde_omega(double a, double b, double c, const ModulusSpec& omega1,
                        const ModulusSpec& omega2) {
  if (!(b > 0.0)) throw std::domain_error("tilde_omega: b must be positive");
  const int kPerOctave = 16, kOctaves = 40;
  std::vector<double> s, v;
  s.reserve(kPerOctave * kOctaves + 1);
  for (int j = kPerOctave * kOctaves; j >= 0; --j) {
    const double theta = b * std::exp2(-static_cast<double>(j) / kPerOctave);
    const double i1 = theta < b ? dini_integral(omega1, theta, b) : 0.0;
    const double i2 = theta < b ? dini_integral(omega2, theta, b) : 0.0;
    s.push_back(theta);
    v.push_back(theta * (a + i1) * std::exp(c * i2));
  }
  return ModulusSpec::tabulated_from(std::move(s), std::move(v), b);
}

ModulusSpec sum_moduli(const ModulusSpec& a, const ModulusSpec& b, double eta0) {
  const int kPerOctave = 8, kOctaves = 40;
  std::vector<double> s, v;
  for (int j = kPerOctave * kOctaves; j >= 0; --j) {
    const double x = eta0 * std::exp2(-static_cast<double>(j) / kPerOctave);
    s.push_back(x);
    v.push_back(eval_modulus(a, std::min(x, a.eta0)) + eval_modulus(b, std::min(x, b.eta0)));
  }
  return ModulusSpec::tabulated_from(std::move(s), std::move(v), eta0);
}

}  // namespace pblab::moduli
