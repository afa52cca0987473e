// qdim: batch front end for the dimension toolkit.
//
//   qdim <solve|sample|estimate|verify|multienergy> --config PATH
//        [--seed U64] [--out DIR] [--threads K] [--reuse-cloud PATH]

#include <omp.h>

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "qdim/commands.hpp"
#include "qdim/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generalised q-dimensions of almost self-affine measures"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(qdim::kToolVersion));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 0;
  std::optional<std::string> reuse;

  const char* verbs[][2] = {
      {"solve", "theoretical d_q, affinity dimension and phase-transition scan"},
      {"sample", "sample a point cloud from the random construction"},
      {"estimate", "empirical D_q from a cloud via mesh and correlation ladders"},
      {"verify", "solve, sample and estimate; report empirical minus theoretical"},
      {"multienergy", "multienergy integrals, join-class bounds and decay diagnostics"},
  };
  for (auto& v : verbs) {
    auto* sub = app.add_subcommand(v[0], v[1]);
    sub->add_option("--config", config_path, "run configuration (INI or JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--out", out, "output directory, overrides the config");
    sub->add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
    if (std::string(v[0]) == "estimate" || std::string(v[0]) == "verify") {
      sub->add_option("--reuse-cloud", reuse, "read the cloud from this file instead of sampling");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(qdim::ExitCode::config_error);
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    if (threads > 0) omp_set_num_threads(threads);
    qdim::RunConfig config = qdim::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output = *out;
    std::optional<std::filesystem::path> cloud;
    if (reuse) cloud = *reuse;
    const auto rec = qdim::run_command(verb, config, cloud);
    for (const auto& w : rec.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << rec.to_json().dump(2) << '\n';
    return 0;
  } catch (const qdim::Error& e) {
    std::cerr << "qdim " << verb << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "qdim " << verb << ": " << e.what() << '\n';
    return static_cast<int>(qdim::ExitCode::failure);
  }
}
