#pragma once

#include <map>
#include <string>

#include "pblab/omega_field.hpp"
#include "pblab/solver.hpp"

namespace pblab::harness {

struct DomainConfig {
  std::string family = "flat";  // flat | cone | radial_profile | time_wave
  double L = 0.0;
  bool has_omega = false;
  moduli::ModulusSpec omega;  // radial profile AND the C1 modulus for predictions
  double R = 1.0;
  double sign = 1.0;
  double amplitude = 0.0, frequency = 1.0;

  geometry::ParabolicDomain build(int n) const;
};

struct SourceConfig {
  std::string kind = "zero";  // zero | constant | dp_singularity | separable_cos
  double value = 0.0;
  double gamma = 0.5;  // dp_singularity exponent: f = d_p(., z0)^(-gamma)
  Vec center{};
  double center_t = 0.0;

  std::function<double(const Vec&, double)> fn(int n) const;
};

struct DataConfig {
  std::string kind = "vertical_gap";  // zero | vertical_gap | linear_xn
  std::function<double(const Vec&, double)> fn(const geometry::ParabolicDomain& dom) const;
};

struct ExperimentConfig {
  int n = 2;
  DomainConfig domain;
  double lambda = 1.0, Lambda = 1.0;
  SourceConfig source;
  DataConfig data;

  double rho_min = 1.0 / 128, rho_max = 0.25;
  double r_anchor = 0.25;
  std::vector<int> resolutions = {64};  // cells per cylinder radius
  int tau_factor = 1;                   // tau_hat = tau_factor / res^2
  std::uint64_t seed = 0x5eed;

  double C0 = 4.0;             // barrier exponent constant (calibrated elsewhere)
  double max_seminorm = 0.05;  // working threshold for barrier-based runs
  std::vector<double> mu_probes = {0.0, 0.01, 0.02, 0.05, 0.1};
  double holder_alpha = 0.5;   // boundary Harnack quotient exponent

  int consistency_k_min = 2, consistency_k_max = 5;
  int special_cells = 32;  // cells per radius for special solutions
  int quad_order = 16;     // mollifier quadrature order for regdist-backed runs

  // interior modulus experiment
  double im_t0 = -1.0 / 32;  // singular-source time (x0 = 0 by symmetry)
  int im_levels = 4;

  // optional verdict requirements
  double require_min_over_max = 0.0;  // Dini centerline check when > 0
  bool require_decay_stable = false;  // non-Dini decay constant across resolutions
};

struct ScaleRow {
  int resolution = 0;
  double scale = 0;
  double measured = 0;
  double predicted = 0;
  double ratio = 0;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<ScaleRow> rows;
  std::vector<std::pair<std::string, double>> constants;  // fitted constants, ordered
  std::vector<std::string> notes;
  bool pass = false;
  double runtime_seconds = 0;

  double constant(const std::string& name) const;
  void write_csv(const std::string& path, const std::string& provenance) const;
  void write_summary(const std::string& path) const;
  void write_svg(const std::string& path) const;
};

ExperimentReport run_hopf(const ExperimentConfig& config);
ExperimentReport run_upper_bound(const ExperimentConfig& config);
ExperimentReport run_almost_positivity(const ExperimentConfig& config);
ExperimentReport run_boundary_harnack_ratio(const ExperimentConfig& config);
ExperimentReport run_dyadic_consistency(const ExperimentConfig& config);
ExperimentReport run_interior_modulus(const ExperimentConfig& config);
ExperimentReport run_green_bound(const ExperimentConfig& config);

// Four-region Gaussian-bound sum of the dyadic Green decomposition.
double dyadic_green_bound(const geometry::ParabolicPoint& a, const geometry::ParabolicPoint& b,
                          int n, const moduli::ModulusSpec& omega_f, double gauss_c,
                          double gauss_C);

// sum_{m>=1} 2^{m (n^2+1)/(n+1)} exp(-c 4^m), summed to convergence.
double green_geometric_tail(int n, double c, int max_terms = 1 << 20);

}  // namespace pblab::harness
