#pragma once

#include "pblab/common.hpp"
#include "pblab/regdist.hpp"

namespace pblab::barriers {

struct EllipticityPair {
  double lambda = 1.0;
  double Lambda = 1.0;

  EllipticityPair() = default;
  EllipticityPair(double lam, double Lam) : lambda(lam), Lambda(Lam) {
    if (!(0 < lam && lam <= Lam)) throw ContractError("EllipticityPair: need 0 < lambda <= Lambda");
  }
};

// M^-(H) = lambda * sum(positive eigenvalues) + Lambda * sum(negative ones);
// M^+ mirrored. H row-major n x n, rejected if asymmetry exceeds 1e-12.
double pucci_minus(const double* H, int n, const EllipticityPair& ell);
double pucci_plus(const double* H, int n, const EllipticityPair& ell);

// Extremal coefficient matrix attaining M^- (for the sampling oracle).
void pucci_minus_argmin(const double* H, int n, const EllipticityPair& ell, double* A_out);

enum class BarrierSide { sub, super };  // sub: d^{1+eps}, super: d^{1-eps}

struct BarrierSpec {
  double epsilon;
  BarrierSide side;

  // eps must be admissible for the working seminorm: eps >= C0 * seminorm.
  BarrierSpec(double eps, BarrierSide s, double C0, double seminorm);
};

// Residual of the extremal operator on d^{1 +/- eps}, assembled by the chain
// rule from the distance derivatives. Contract: <= 0 for sub, >= 0 for super.
double barrier_residual(const regdist::RegularizedDistanceField& field, const BarrierSpec& spec,
                        const geometry::ParabolicPoint& point, const EllipticityPair& ell);

// Same residual from precomputed derivatives (used by the calibration sweep).
double barrier_residual_from(const regdist::DistanceDerivatives& der, int n, double eps,
                             BarrierSide side, const EllipticityPair& ell);

struct CalibrationScale {
  const regdist::RegularizedDistanceField* field;
  double r;                                      // working cylinder radius
  double seminorm;                               // [Gamma] over Q'_{2r}
  std::vector<geometry::ParabolicPoint> points;  // sample points in Omega cap Q_r
  std::string domain_name;
};

struct CalibrationRow {
  std::string domain;
  double scale = 0, seminorm = 0, min_eps = 0, implied_C0 = 0;
};

struct CalibrationResult {
  double C0 = 0;
  bool ok = false;
  std::vector<CalibrationRow> rows;

  // (domain family, scale, seminorm, minimal working eps, implied C0)
  void write_csv(const std::string& path) const;
};

// Smallest C0 in [0.1, 1e3] such that both residual signs hold (tolerance
// residual_tol) with eps = C0 * seminorm at every sampled point of every
// scale. Bisection; deterministic for fixed samples.
CalibrationResult calibrate_C0(const std::vector<CalibrationScale>& scales,
                               const EllipticityPair& ell, double residual_tol = 1e-8,
                               double eps_cap = 0.499);

// Convenience: deterministic interior sample points for a domain/scale.
std::vector<geometry::ParabolicPoint> sample_points(const geometry::ParabolicDomain& dom, double r,
                                                    int count, double d_floor,
                                                    std::uint64_t seed = 0x5eed);

}  // namespace pblab::barriers
