#pragma once

// Hot loops, in two interchangeable builds: `omp` (OpenMP, deterministic
// regardless of thread count) and `serial` (straightforward reference used
// by the tests and the benchmark).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace qdim {

class DisplacementField;

/// Log singular values and log cylinder masses of every word of length
/// 1..depth, each level in lexicographic (base-m index) order.
struct WordTable {
  int m = 0;
  int dim = 0;
  int depth = 0;
  /// level k (1-based): m^k * dim entries, descending per word.
  std::vector<std::vector<double>> log_sv;
  /// level k: m^k entries.
  std::vector<std::vector<double>> log_mass;

  std::size_t words(int k) const noexcept { return log_mass[static_cast<std::size_t>(k)].size(); }
};

/// log phi^s from log singular values (descending), same branches as log_phi_s.
double log_phi_from_logs(const double* log_sv, int dim, double s) noexcept;

/// Number of words of length 1..depth, saturating at UINT64_MAX.
std::uint64_t words_up_to(int m, int depth) noexcept;

/// Pairs (count) of distinct occupied mesh cells, in ascending cell order.
using CellCounts = std::vector<std::uint64_t>;

/// Inputs for the exact truncated multienergy sum over depth-D cylinders.
struct TruncatedEnergyInput {
  int m = 0;
  int depth = 0;
  /// Rays per tuple besides the outer one.
  int inner = 1;
  /// log phi^s(T_v) for every vertex, level by level from the root; level l
  /// occupies [offset(l), offset(l) + m^l).
  std::vector<double> log_phi;
  std::vector<std::size_t> level_offset;
  /// log mu of each depth-D cylinder.
  std::vector<double> log_mass;
};

namespace kernels::omp {

WordTable build_word_table(const AffineIFS& ifs, const MeasureModel& model, int depth);
/// log sum over words of length k of exp(phi_exp * log phi^s(T_w) + mass_exp * log mu(C_w)).
double log_weighted_sum(const WordTable& table, int k, double s, double phi_exp, double mass_exp);
/// Same sums for every k = 0..k_max by depth-first traversal, without a table.
std::vector<double> log_weighted_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double phi_exp,
                                      double mass_exp, int k_max);
/// n points of the cloud (row-major, n * dim).
std::vector<double> sample_cloud(const AffineIFS& ifs, const MeasureModel& model, const DisplacementField& field,
                                 std::size_t n, int depth, std::uint64_t words_seed);
CellCounts mesh_counts(std::span<const double> coords, int dim, double r);
/// For each of the first `n` points, number of other points (among the first n) within distance r.
std::vector<std::uint32_t> ball_counts(std::span<const double> coords, int dim, std::size_t n, double r);
/// Inner sums sum_{i_1..i_n} prod mu(C_{i_t}) / kernel(i_1..i_n, j) for every outer word j.
std::vector<double> truncated_inner_sums(const TruncatedEnergyInput& in);

}  // namespace kernels::omp

namespace kernels::serial {

WordTable build_word_table(const AffineIFS& ifs, const MeasureModel& model, int depth);
/// Reference: composes and decomposes every word independently.
double log_weighted_sum(const AffineIFS& ifs, const MeasureModel& model, int k, double s, double phi_exp,
                        double mass_exp);
std::vector<double> log_weighted_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double phi_exp,
                                      double mass_exp, int k_max);
std::vector<double> sample_cloud(const AffineIFS& ifs, const MeasureModel& model, const DisplacementField& field,
                                 std::size_t n, int depth, std::uint64_t words_seed);
CellCounts mesh_counts(std::span<const double> coords, int dim, double r);
std::vector<std::uint32_t> ball_counts(std::span<const double> coords, int dim, std::size_t n, double r);
std::vector<double> truncated_inner_sums(const TruncatedEnergyInput& in);

}  // namespace kernels::serial

}  // namespace qdim
