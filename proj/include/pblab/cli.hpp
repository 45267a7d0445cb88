#pragma once

#include <string>

#include "pblab/harness.hpp"

namespace pblab::cli {

struct RunManifest {
  std::string experiment;  // hopf | upper_bound | almost_positivity | boundary_harnack |
                           // dyadic_consistency | interior_modulus | green_bound
  std::string output_dir = "out";
  bool plots = false;
  bool require_dini = false;
  harness::ExperimentConfig config;
  std::string canonical;  // canonical serialized form (hash input)
};

RunManifest parse_manifest(const std::string& text);
std::string serialize_manifest(const RunManifest& m);

std::uint64_t fnv1a64(const std::string& s);

// Executes the experiment, writes report.csv / summary.txt (/ plot.svg), and
// returns the process exit status: 0 iff every verdict passed.
int run(const RunManifest& m);

std::string list_experiments();

// Honors PBLAB_THREADS (thread cap) and PBLAB_EXEC=serial|openmp.
void configure_parallelism_from_env();

}  // namespace pblab::cli
