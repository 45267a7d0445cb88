#include "pblab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace pblab::cli {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("manifest: unknown key '" + key + "' in " + where);
}

moduli::ModulusSpec parse_modulus(const json& j) {
  require_keys(j, "omega", {"family", "alpha", "kappa", "log_pow", "eta0", "scales", "values"});
  const std::string family = j.value("family", "power");
  const double eta0 = j.value("eta0", 1.0);
  if (!(eta0 > 0)) throw ConfigError("manifest: omega.eta0 must be positive");
  if (family == "power") return moduli::ModulusSpec::power_law(j.value("alpha", 1.0), eta0);
  if (family == "log_inverse")
    return moduli::ModulusSpec::log_inverse_law(j.value("kappa", 1.0), eta0,
                                                j.value("log_pow", 1.0));
  if (family == "scaled_power")
    return moduli::ModulusSpec::scaled_power_law(j.value("kappa", 1.0), j.value("alpha", 1.0),
                                                 eta0);
  if (family == "zero") return moduli::ModulusSpec::zero(eta0);
  if (family == "tabulated") {
    std::vector<double> s = j.at("scales").get<std::vector<double>>();
    std::vector<double> v = j.at("values").get<std::vector<double>>();
    if (s.size() != v.size() || s.empty())
      throw ConfigError("manifest: tabulated omega needs matching scales/values");
    return moduli::ModulusSpec::tabulated_from(std::move(s), std::move(v), eta0);
  }
  throw ConfigError("manifest: unknown omega family '" + family + "'");
}

json modulus_to_json(const moduli::ModulusSpec& m) {
  json j;
  switch (m.family) {
    case moduli::Family::power:
      j["family"] = "power";
      j["alpha"] = m.alpha;
      break;
    case moduli::Family::log_inverse:
      j["family"] = "log_inverse";
      j["kappa"] = m.kappa;
      j["log_pow"] = m.log_pow;
      break;
    case moduli::Family::scaled_power:
      j["family"] = "scaled_power";
      j["kappa"] = m.kappa;
      j["alpha"] = m.alpha;
      break;
    case moduli::Family::tabulated:
      j["family"] = "tabulated";
      j["scales"] = m.tab_s;
      j["values"] = m.tab_v;
      break;
  }
  j["eta0"] = m.eta0;
  return j;
}

const std::set<std::string> kExperiments = {
    "hopf",          "upper_bound",       "almost_positivity", "boundary_harnack",
    "dyadic_consistency", "interior_modulus", "green_bound"};

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RunManifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("manifest: parse failure: ") + e.what());
  }
  require_keys(j, "top level",
               {"experiment", "output_dir", "plots", "seed", "n", "resolutions", "tau_factor",
                "domain", "coefficients", "source", "data", "scales", "constants", "consistency",
                "interior", "checks"});

  RunManifest m;
  m.experiment = j.at("experiment").get<std::string>();
  if (!kExperiments.count(m.experiment))
    throw ConfigError("manifest: unknown experiment '" + m.experiment + "'");
  m.output_dir = j.value("output_dir", "out");
  m.plots = j.value("plots", false);

  auto& cfg = m.config;
  cfg.seed = j.value("seed", std::uint64_t{0x5eed});
  cfg.n = j.value("n", 2);
  if (cfg.n < 1 || cfg.n > 3) throw ConfigError("manifest: n must be 1, 2 or 3");
  if (j.count("resolutions")) cfg.resolutions = j.at("resolutions").get<std::vector<int>>();
  for (int r : cfg.resolutions)
    if (r < 16 || r % 8 != 0)
      throw ConfigError("manifest: resolutions must be multiples of 8, at least 16");
  cfg.tau_factor = j.value("tau_factor", 1);
  if (cfg.tau_factor < 1) throw ConfigError("manifest: tau_factor must be >= 1");

  if (j.count("domain")) {
    const auto& d = j.at("domain");
    require_keys(d, "domain",
                 {"family", "L", "R", "sign", "amplitude", "frequency", "omega"});
    cfg.domain.family = d.value("family", "flat");
    cfg.domain.L = d.value("L", 0.0);
    cfg.domain.R = d.value("R", 1.0);
    cfg.domain.sign = d.value("sign", 1.0);
    cfg.domain.amplitude = d.value("amplitude", 0.0);
    cfg.domain.frequency = d.value("frequency", 1.0);
    if (d.count("omega")) {
      cfg.domain.omega = parse_modulus(d.at("omega"));
      cfg.domain.has_omega = true;
    }
    if (cfg.domain.family == "radial_profile" && !cfg.domain.has_omega)
      throw ConfigError("manifest: radial_profile domain requires omega");
    if (cfg.domain.family == "cone" && !(cfg.domain.L >= 0 && cfg.domain.L < 1))
      throw ConfigError("manifest: cone L must lie in [0, 1)");
  }

  if (j.count("coefficients")) {
    const auto& c = j.at("coefficients");
    require_keys(c, "coefficients", {"lambda", "Lambda"});
    cfg.lambda = c.value("lambda", 1.0);
    cfg.Lambda = c.value("Lambda", 1.0);
    if (!(cfg.lambda > 0 && cfg.lambda <= cfg.Lambda))
      throw ConfigError("manifest: need 0 < lambda <= Lambda");
  }

  if (j.count("source")) {
    const auto& s = j.at("source");
    require_keys(s, "source", {"kind", "value", "gamma", "center", "center_t"});
    cfg.source.kind = s.value("kind", "zero");
    cfg.source.value = s.value("value", 0.0);
    cfg.source.gamma = s.value("gamma", 0.5);
    cfg.source.center_t = s.value("center_t", 0.0);
    if (s.count("center")) {
      const auto c = s.at("center").get<std::vector<double>>();
      for (std::size_t i = 0; i < c.size() && i < 3; ++i) cfg.source.center[i] = c[i];
    }
  }

  if (j.count("data")) {
    const auto& d = j.at("data");
    require_keys(d, "data", {"kind"});
    cfg.data.kind = d.value("kind", "vertical_gap");
  }

  if (j.count("scales")) {
    const auto& s = j.at("scales");
    require_keys(s, "scales", {"rho_min", "rho_max", "r_anchor"});
    cfg.rho_min = s.value("rho_min", cfg.rho_min);
    cfg.rho_max = s.value("rho_max", cfg.rho_max);
    cfg.r_anchor = s.value("r_anchor", cfg.r_anchor);
  }
  if (!(cfg.rho_min > 0 && cfg.rho_min <= cfg.rho_max && cfg.rho_max <= 0.25))
    throw ConfigError("manifest: need 0 < rho_min <= rho_max <= 1/4");

  if (j.count("constants")) {
    const auto& c = j.at("constants");
    require_keys(c, "constants", {"C0", "max_seminorm", "mu_probes", "holder_alpha"});
    cfg.C0 = c.value("C0", cfg.C0);
    cfg.max_seminorm = c.value("max_seminorm", cfg.max_seminorm);
    if (c.count("mu_probes")) cfg.mu_probes = c.at("mu_probes").get<std::vector<double>>();
    cfg.holder_alpha = c.value("holder_alpha", cfg.holder_alpha);
  }

  if (j.count("consistency")) {
    const auto& c = j.at("consistency");
    require_keys(c, "consistency", {"k_min", "k_max", "cells", "quad_order"});
    cfg.consistency_k_min = c.value("k_min", cfg.consistency_k_min);
    cfg.consistency_k_max = c.value("k_max", cfg.consistency_k_max);
    cfg.special_cells = c.value("cells", cfg.special_cells);
    cfg.quad_order = c.value("quad_order", cfg.quad_order);
  }

  if (j.count("interior")) {
    const auto& c = j.at("interior");
    require_keys(c, "interior", {"t0", "levels"});
    cfg.im_t0 = c.value("t0", cfg.im_t0);
    cfg.im_levels = c.value("levels", cfg.im_levels);
  }

  if (j.count("checks")) {
    const auto& c = j.at("checks");
    require_keys(c, "checks", {"min_over_max", "decay_stable", "require_dini"});
    cfg.require_min_over_max = c.value("min_over_max", 0.0);
    cfg.require_decay_stable = c.value("decay_stable", false);
    m.require_dini = c.value("require_dini", false);
  }

  // Probing-scale resolution rule: the smallest probe is read on the deepest
  // level with normalized offset rho_max, which must span at least 8 cells.
  const bool laddered = m.experiment == "hopf" || m.experiment == "upper_bound";
  if (laddered) {
    for (int res : cfg.resolutions)
      if (cfg.rho_max * res < 8.0 - 1e-12)
        throw ConfigError("manifest: rho_min < 8h at its probing scale (constraint: rho_min >= "
                          "8 * h * rho_min / rho_max; raise resolution or rho_max)");
  }
  if (m.require_dini && cfg.domain.has_omega) {
    if (moduli::is_dini(cfg.domain.omega) != moduli::DiniVerdict::dini)
      throw ConfigError("manifest: checks.require_dini set but omega is not Dini");
  }

  m.canonical = serialize_manifest(m);
  return m;
}

std::string serialize_manifest(const RunManifest& m) {
  const auto& cfg = m.config;
  json j;
  j["experiment"] = m.experiment;
  j["output_dir"] = m.output_dir;
  j["plots"] = m.plots;
  j["seed"] = cfg.seed;
  j["n"] = cfg.n;
  j["resolutions"] = cfg.resolutions;
  j["tau_factor"] = cfg.tau_factor;
  json d;
  d["family"] = cfg.domain.family;
  d["L"] = cfg.domain.L;
  d["R"] = cfg.domain.R;
  d["sign"] = cfg.domain.sign;
  d["amplitude"] = cfg.domain.amplitude;
  d["frequency"] = cfg.domain.frequency;
  if (cfg.domain.has_omega) d["omega"] = modulus_to_json(cfg.domain.omega);
  j["domain"] = d;
  j["coefficients"] = {{"lambda", cfg.lambda}, {"Lambda", cfg.Lambda}};
  j["source"] = {{"kind", cfg.source.kind},
                 {"value", cfg.source.value},
                 {"gamma", cfg.source.gamma},
                 {"center", std::vector<double>{cfg.source.center[0], cfg.source.center[1],
                                                cfg.source.center[2]}},
                 {"center_t", cfg.source.center_t}};
  j["data"] = {{"kind", cfg.data.kind}};
  j["scales"] = {{"rho_min", cfg.rho_min}, {"rho_max", cfg.rho_max}, {"r_anchor", cfg.r_anchor}};
  j["constants"] = {{"C0", cfg.C0},
                    {"max_seminorm", cfg.max_seminorm},
                    {"mu_probes", cfg.mu_probes},
                    {"holder_alpha", cfg.holder_alpha}};
  j["consistency"] = {{"k_min", cfg.consistency_k_min},
                      {"k_max", cfg.consistency_k_max},
                      {"cells", cfg.special_cells},
                      {"quad_order", cfg.quad_order}};
  j["interior"] = {{"t0", cfg.im_t0}, {"levels", cfg.im_levels}};
  j["checks"] = {{"min_over_max", cfg.require_min_over_max},
                 {"decay_stable", cfg.require_decay_stable},
                 {"require_dini", m.require_dini}};
  return j.dump(2);
}

int run(const RunManifest& m) {
  namespace fs = std::filesystem;
  fs::create_directories(m.output_dir);
  if (!fs::is_directory(m.output_dir) ||
      (fs::status(m.output_dir).permissions() & fs::perms::owner_write) == fs::perms::none)
    throw ConfigError("manifest: output directory is not writable");

  harness::ExperimentReport rep;
  if (m.experiment == "hopf")
    rep = harness::run_hopf(m.config);
  else if (m.experiment == "upper_bound")
    rep = harness::run_upper_bound(m.config);
  else if (m.experiment == "almost_positivity")
    rep = harness::run_almost_positivity(m.config);
  else if (m.experiment == "boundary_harnack")
    rep = harness::run_boundary_harnack_ratio(m.config);
  else if (m.experiment == "dyadic_consistency")
    rep = harness::run_dyadic_consistency(m.config);
  else if (m.experiment == "interior_modulus")
    rep = harness::run_interior_modulus(m.config);
  else if (m.experiment == "green_bound")
    rep = harness::run_green_bound(m.config);
  else
    throw ConfigError("unknown experiment " + m.experiment);

  char prov[160];
  std::snprintf(prov, sizeof(prov), "pblab %s; manifest_hash=%016llx; seed=%llu", kVersion,
                static_cast<unsigned long long>(fnv1a64(m.canonical)),
                static_cast<unsigned long long>(m.config.seed));
  rep.write_csv((fs::path(m.output_dir) / "report.csv").string(), prov);
  rep.write_summary((fs::path(m.output_dir) / "summary.txt").string());
  if (m.plots) rep.write_svg((fs::path(m.output_dir) / "plot.svg").string());
  return rep.pass ? 0 : 1;
}

std::string list_experiments() {
  return "hopf                 boundary nondegeneracy: centerline ratio vs exp(-C int omega)\n"
         "upper_bound          boundary growth sup|v|/rho and the boundary modulus check\n"
         "almost_positivity    empirical mu0 for the quantitative maximum principle\n"
         "boundary_harnack     ratio Holder quotient of two positive solutions\n"
         "dyadic_consistency   ||v - w|| / eps_{k-1} across consecutive dyadic scales\n"
         "interior_modulus     interior oscillation vs d * int_d^4 omega_f dr/r\n"
         "green_bound          four-region Gaussian bound vs r * int omega_f\n";
}

void configure_parallelism_from_env() {
  if (const char* exec = std::getenv("PBLAB_EXEC")) {
    if (std::string(exec) == "serial") par::set_mode(par::Mode::serial);
    if (std::string(exec) == "openmp") par::set_mode(par::Mode::openmp);
  }
#ifdef _OPENMP
  if (const char* cap = std::getenv("PBLAB_THREADS")) {
    const int k = std::atoi(cap);
    if (k > 0) omp_set_num_threads(k);
  }
#endif
}

}  // namespace pblab::cli
