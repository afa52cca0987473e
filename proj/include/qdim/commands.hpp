#pragma once

// The five batch commands behind the qdim executable. Each takes a resolved
// RunConfig, writes its artifacts into config.output and returns a record
// whose payload is deterministic for a fixed config and seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdim/config.hpp"

namespace qdim {

inline constexpr const char* kToolVersion = "0.3.0";

struct ResultRecord {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::string tool_version = kToolVersion;
  std::vector<std::string> warnings;
  nlohmann::json payload;

  nlohmann::json to_json() const;
};

nlohmann::json solve_payload(const RunConfig& config);

ResultRecord cmd_solve(const RunConfig& config);
ResultRecord cmd_sample(const RunConfig& config);
/// Estimates from `cloud` when given, otherwise from a freshly sampled cloud.
ResultRecord cmd_estimate(const RunConfig& config, const std::optional<std::filesystem::path>& cloud = {});
ResultRecord cmd_verify(const RunConfig& config, const std::optional<std::filesystem::path>& cloud = {});
ResultRecord cmd_multienergy(const RunConfig& config);

/// Dispatch by verb name; also writes resolved_config.ini, <verb>_result.json
/// and appends one line to results.jsonl in config.output.
ResultRecord run_command(const std::string& verb, const RunConfig& config,
                         const std::optional<std::filesystem::path>& cloud = {});

/// Truncation depth K used for sampling, and the finest ladder radius it was
/// chosen against.
struct DepthChoice {
  int depth = 0;
  double r_min = 0.0;
  double bound = 0.0;
  /// Set when an explicit depth leaves the truncation error above r_min / 10.
  std::optional<int> suggested;
};
DepthChoice choose_depth(const RunConfig& config);

/// FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace qdim
