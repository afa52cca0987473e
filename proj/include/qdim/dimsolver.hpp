#pragma once

// Theoretical dimensions from the moment sums
//
//   Phi_k(s, q) = sum_{|i| = k} phi^s(T_i)^{1-q} mu(C_i)^q,
//
// whose growth rate lim Phi_k^{1/k} is increasing in s; d_q is the s where
// it equals 1.

#include <cstdint>
#include <optional>
#include <vector>

#include "qdim/kernels.hpp"
#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace qdim {

struct SolverOptions {
  double tol = 1e-4;
  /// Words held in the table used by the root finder (levels 1..k_max).
  std::uint64_t table_budget = std::uint64_t{1} << 21;
  /// Terms allowed in a direct moment sum.
  std::uint64_t sum_budget = 20'000'000;
  /// Explicit table depth; 0 picks the deepest level within table_budget.
  int k_max = 0;
};

/// Exact Phi_k(s, q) over I_k. Throws ResourceLimit above the budget.
double moment_sum(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k,
                  std::uint64_t budget = 20'000'000);
/// log Phi_k(s, q) for k = 0..k_max.
std::vector<double> log_moment_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max,
                                    std::uint64_t budget = 20'000'000);

struct GrowthRate {
  /// Phi_{k_max}^{1/k_max}.
  double estimate = 0.0;
  /// max_k (c Phi_k)^{1/k}, c the supermultiplicativity constant of the model.
  double lower_bound = 0.0;
  /// Phi_{k_max} / Phi_{k_max - 1}.
  double ratio = 0.0;
  int k_max = 0;
};

/// Precomputed word table for repeated growth-rate queries on one system.
class MomentTable {
 public:
  MomentTable(const AffineIFS& ifs, const MeasureModel& model, const SolverOptions& opts = {});

  int k_max() const noexcept { return table_.depth; }
  int dim() const noexcept { return table_.dim; }
  /// log Phi_k(s, q).
  double log_sum(int k, double s, double q) const;
  GrowthRate growth_rate(double s, double q) const;
  /// Upper bound min_k (sum_{I_k} phi^s(T_i))^{1/k} on the submultiplicative rate.
  double affinity_rate(double s) const;
  /// Constant c with c Phi_k supermultiplicative: min concatenation ratio ^ q.
  double supermultiplicative_constant(double q) const;

 private:
  WordTable table_;
  double min_ratio_;
};

GrowthRate growth_rate(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max);

struct DimensionResult {
  double d_q = 0.0;
  double q = 0.0;
  int k_max = 0;
  int iterations = 0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  /// Growth-rate lower bounds at the bracket ends (rate(s_lo) < 1 < rate(s_hi)).
  double rate_lo = 0.0;
  double rate_hi = 0.0;
};

/// Bisection for the s where the supermultiplicative lower bound on the
/// growth rate crosses 1. Throws NoRoot when expansion fails to bracket.
DimensionResult d_q_minus(const MomentTable& table, double q, double tol = 1e-4);
DimensionResult d_q_minus(const AffineIFS& ifs, const MeasureModel& model, double q, const SolverOptions& opts = {});

/// Sums over the cut-sets J^s(rho^l), l = 1..l_max.
std::vector<double> d_q_plus_cutset(const AffineIFS& ifs, const MeasureModel& model, double q, double s, double rho,
                                    int l_max, std::size_t budget = 20'000'000);

/// Root of the submultiplicative rate of sum_{I_k} phi^s(T_i).
double affinity_dimension(const MomentTable& table, double tol = 1e-4);
double affinity_dimension(const AffineIFS& ifs, double tol = 1e-4, const SolverOptions& opts = {});

/// Closed form for identical maps T_i = T: the s with phi^s(T) = (sum p_i^q)^{1/(q-1)}.
double closed_form_d_q(const Matrix& t, const std::vector<double>& probs, double q);

struct PhaseScan {
  std::vector<double> q;
  std::vector<double> d_q;
  /// Indices i into q where the slope jump at q[i] is flagged.
  std::vector<std::size_t> kinks;
  /// Right slope minus left slope at each interior grid point (0 at the ends).
  std::vector<double> slope_jump;
  double noise_floor = 0.0;
};

/// d_q on a strictly increasing grid (q > 1) with kink detection: flag a local
/// maximum of |slope jump| exceeding 5x the noise floor max(4 tol / h, median |jump|).
PhaseScan phase_transition_scan(const MomentTable& table, const std::vector<double>& q_grid, double tol = 1e-4);

}  // namespace qdim
