#pragma once

// Run configuration: an INI document with [ifs], [measure] and [analysis]
// sections plus top-level `seed` and `output`, or the same structure as JSON.
// Lists are whitespace-separated numbers in INI and arrays in JSON.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace qdim {

struct AnalysisConfig {
  std::vector<double> q = {2.0};
  double tol = 1e-4;
  std::uint64_t table_budget = std::uint64_t{1} << 21;

  double phase_q_min = 1.5;
  double phase_q_max = 4.0;
  double phase_q_step = 0.05;
  double phase_tol = 1e-6;

  std::uint64_t samples = 100000;
  /// 0: choose K so the truncation bound is below a tenth of the finest radius.
  int depth = 0;
  double rho = 0.5;
  int rungs = 12;
  /// 0: bounding-box diameter of the cloud.
  double r0 = 0.0;
  double min_per_cube = 10.0;
  std::uint64_t min_cubes = 5;
  std::vector<std::string> forms = {"mesh", "correlation"};
  std::uint64_t correlation_points = 20000;
  double verify_tolerance = 0.15;

  std::vector<double> s_values = {0.3, 0.7};
  int energy_n = 1;
  double energy_q = 2.0;
  int energy_depth = 16;
  std::uint64_t energy_samples = 4096;
  std::uint64_t energy_inner = 64;
  int energy_exact_depth = 8;
  int decay_k_max = 12;
  int class_max_spread = 3;
  int class_max_level = 3;
};

struct RunConfig {
  int dim = 0;
  /// Row-major N x N entries per map.
  std::vector<std::vector<double>> maps;
  double region_radius = 1.0;

  std::string measure_kind = "bernoulli";
  std::vector<double> probs;
  std::vector<std::vector<double>> potential;

  AnalysisConfig analysis;
  std::uint64_t seed = 1;
  std::string output = "qdim_out";

  AffineIFS ifs() const;
  MeasureModel model() const;

  /// Fully resolved INI text, defaults included.
  std::string to_ini() const;
  std::uint64_t hash() const { return fnv_of_ini(); }

 private:
  std::uint64_t fnv_of_ini() const;
};

/// Parse INI or JSON text (JSON when the first non-blank character is '{').
/// Errors name the line or the [section] key at fault.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace qdim
