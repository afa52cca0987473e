#pragma once

// Multienergy integrals
//
//   E = int [ int...int phi^s(i_1, ..., i_n, j)^{-1} dmu(i_1)...dmu(i_n) ]^{(q-1)/n} dmu(j),
//
// where phi^s(rays) is the product of phi^s(T_v) over the join set of the
// rays, plus the numerical checks built on them.

#include <cstdint>
#include <vector>

#include "qdim/codespace.hpp"
#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace qdim {

struct MultiEnergyOptions {
  int batches = 32;
  /// Inner n-tuples averaged per outer ray.
  std::size_t inner = 64;
  JoinResolution mode = JoinResolution::reject;
  std::uint64_t seed = 1;
};

struct MultiEnergyEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int n = 1;
  double s = 0.0;
  double q = 2.0;
  double outer_power = 1.0;
  std::size_t sample_count = 0;
  int truncation_depth = 0;
  /// Inner tuples that stayed unresolved after three redraws.
  std::size_t failures = 0;
  double failure_rate = 0.0;
};

/// Monte Carlo over `samples` outer rays split into batches; rays are words of
/// length `depth`. Throws DepthInsufficient when more than 1% of inner tuples
/// fail to resolve (reject mode).
MultiEnergyEstimate mc_multienergy(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                   std::size_t samples, int depth, const MultiEnergyOptions& opts = {});

/// Exact sum over (n+1)-tuples of depth-D cylinders, joins deeper than D
/// collapsed to depth D.
double exact_truncated_multienergy(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                   int depth, std::uint64_t budget = 600'000'000);

struct JoinClassCheck {
  JoinClass join_class;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Integral of phi^s(i_1..i_n)^{-1} over n-tuples whose join set lies in the
/// class, against mu(C_v)^{(q-n)/(q-1)} prod_{l in L} (sum_{|u|=l, u >= v}
/// phi^s(T_u)^{1-q} mu(C_u)^q)^{1/(q-1)}. Exact when depth exceeds every level.
JoinClassCheck check_join_class_bound(const AffineIFS& ifs, const MeasureModel& model, double s, double q,
                               const JoinClass& join_class, int depth);

/// Every join class with spread 2..max_spread (and <= q) whose levels are at
/// most max_level, over all roots.
std::vector<JoinClassCheck> check_join_class_bounds(const AffineIFS& ifs, const MeasureModel& model, double s, double q,
                                          int max_spread, int max_level);

struct DecayCheck {
  /// exp of the fitted slope of log Phi_k(s, q) against k.
  double lambda_fit = 0.0;
  double slope = 0.0;
  /// Slope below -1e-3.
  bool geometric = false;
  /// Slope above +1e-3.
  bool growing = false;
  std::vector<double> log_sums;
};

DecayCheck check_decay_criterion(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max);

struct TruncationTrend {
  std::vector<double> values;
  /// Ratios of successive differences.
  std::vector<double> difference_ratios;
  /// Geometric mean of the last three difference ratios.
  double ratio = 0.0;
  bool cauchy = false;
};

/// exact_truncated_multienergy for D = 1..d_max and the decay of its increments.
TruncationTrend truncation_trend(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                 int d_max);

struct TransversalityResult {
  double empirical_mean = 0.0;
  double stderr_ = 0.0;
  /// phi^s(T_{u ^ v})^{-1}.
  double bound = 0.0;
  double ratio = 0.0;
};

/// Mean of |Pi(u) - Pi(v)|^{-s} over independent fields; rays are projected to
/// their full length.
TransversalityResult simulate_transversality(const AffineIFS& ifs, const Word& u, const Word& v, double s,
                                             std::size_t trials, std::uint64_t seed);

}  // namespace qdim
