#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pblab/cli.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw pblab::ConfigError("cannot open manifest " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  pblab::cli::configure_parallelism_from_env();

  CLI::App app{"pblab: boundary estimates laboratory for parabolic equations"};
  app.require_subcommand(1);

  std::string manifest_path;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment manifest");
  run_cmd->add_option("manifest", manifest_path, "manifest JSON path")->required();

  std::string validate_path;
  auto* val_cmd = app.add_subcommand("validate", "parse and validate a manifest");
  val_cmd->add_option("manifest", validate_path, "manifest JSON path")->required();

  app.add_subcommand("list-experiments", "print the available experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto m = pblab::cli::parse_manifest(slurp(manifest_path));
      const int status = pblab::cli::run(m);
      std::cout << (status == 0 ? "pass" : "FAIL") << ": reports in " << m.output_dir << "\n";
      return status;
    }
    if (val_cmd->parsed()) {
      const auto m = pblab::cli::parse_manifest(slurp(validate_path));
      std::cout << "valid: " << m.experiment << " (hash "
                << std::hex << pblab::cli::fnv1a64(m.canonical) << std::dec << ")\n";
      return 0;
    }
    std::cout << pblab::cli::list_experiments();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
