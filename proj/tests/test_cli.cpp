#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pblab/cli.hpp"

using namespace pblab;

namespace {

const char* kMinimalHopf = R"({
  "experiment": "hopf",
  "output_dir": "/tmp/pblab_cli_test",
  "seed": 11,
  "n": 2,
  "resolutions": [32],
  "domain": {"family": "flat"},
  "data": {"kind": "vertical_gap"},
  "scales": {"rho_min": 0.0625, "rho_max": 0.25, "r_anchor": 0.25}
})";

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal manifest parses and validates") {
  const auto m = cli::parse_manifest(kMinimalHopf);
  CHECK(m.experiment == "hopf");
  CHECK(m.config.n == 2);
  CHECK(m.config.resolutions == std::vector<int>{32});
}

TEST_CASE("validation diagnostics name the offending key or constraint") {
  SUBCASE("unknown key") {
    try {
      cli::parse_manifest(R"({"experiment":"hopf","domian":{}})");
      FAIL("expected throw");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("domian") != std::string::npos);
    }
  }
  SUBCASE("probing-scale rule rho_min >= 8h") {
    std::string text = kMinimalHopf;
    const auto pos = text.find("[32]");
    text.replace(pos, 4, "[16]");  // rho_max * 16 = 4 < 8 cells
    try {
      cli::parse_manifest(text);
      FAIL("expected throw");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("rho_min < 8h") != std::string::npos);
    }
  }
  SUBCASE("unknown experiment") {
    CHECK_THROWS_AS(cli::parse_manifest(R"({"experiment":"frobnicate"})"), ConfigError);
  }
  SUBCASE("bad ellipticity") {
    std::string text = kMinimalHopf;
    text.insert(text.rfind('}'), R"(,"coefficients":{"lambda":2.0,"Lambda":1.0})");
    CHECK_THROWS_AS(cli::parse_manifest(text), ConfigError);
  }
  SUBCASE("non-Dini omega with the Dini-only flag") {
    std::string text = kMinimalHopf;
    text.insert(text.rfind('}'),
                R"(,"checks":{"require_dini":true})");
    std::string dom = R"("domain": {"family": "radial_profile", "L": 0.6,
      "omega": {"family":"log_inverse","kappa":0.3,"eta0":1.0}})";
    const auto pos = text.find(R"("domain": {"family": "flat"})");
    text.replace(pos, std::string(R"("domain": {"family": "flat"})").size(), dom);
    try {
      cli::parse_manifest(text);
      FAIL("expected throw");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("Dini") != std::string::npos);
    }
  }
}

TEST_CASE("manifest round-trips through serialization") {
  const auto m = cli::parse_manifest(kMinimalHopf);
  const auto text = cli::serialize_manifest(m);
  const auto m2 = cli::parse_manifest(text);
  CHECK(cli::serialize_manifest(m2) == text);
  CHECK(cli::fnv1a64(m2.canonical) == cli::fnv1a64(m.canonical));
}

TEST_CASE("identical manifests produce byte-identical reports") {
  auto m1 = cli::parse_manifest(kMinimalHopf);
  m1.output_dir = "/tmp/pblab_det_a";
  auto m2 = cli::parse_manifest(kMinimalHopf);
  m2.output_dir = "/tmp/pblab_det_b";
  CHECK(cli::run(m1) == 0);
  CHECK(cli::run(m2) == 0);
  const auto a = slurp("/tmp/pblab_det_a/report.csv");
  const auto b = slurp("/tmp/pblab_det_b/report.csv");
  REQUIRE(!a.empty());
  CHECK(a == b);
  // provenance header carries the manifest hash
  CHECK(a.find("manifest_hash=") != std::string::npos);
  CHECK(a.substr(0, 7) == "# pblab");
}

TEST_CASE("run writes summary and optional plot, exit status reflects verdict") {
  auto m = cli::parse_manifest(kMinimalHopf);
  m.output_dir = "/tmp/pblab_run_art";
  m.plots = true;
  CHECK(cli::run(m) == 0);
  CHECK(!slurp("/tmp/pblab_run_art/summary.txt").empty());
  const auto svg = slurp("/tmp/pblab_run_art/plot.svg");
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("list-experiments names every dispatchable kind") {
  const auto text = cli::list_experiments();
  for (const char* kind : {"hopf", "upper_bound", "almost_positivity", "boundary_harnack",
                           "dyadic_consistency", "interior_modulus", "green_bound"})
    CHECK(text.find(kind) != std::string::npos);
}
