#pragma once

// Empirical generalised dimensions of a point cloud with equal weights 1/n.
//
// Mesh form:        M_r(q) = sum over occupied r-mesh cubes of (count/n)^q.
// Correlation form: (1/n) sum_x [tau(B(x, r))]^{q-1} for integer q.
// The dimension is the slope of log M_r(q) against (q-1) log r on a
// geometric ladder of radii.

#include <cstddef>
#include <string>
#include <vector>

#include "qdim/sampler.hpp"

namespace qdim {

enum class EstimatorForm { mesh, correlation };

std::string to_string(EstimatorForm f);

struct LadderOptions {
  double rho = 0.5;
  /// Largest radius; 0 means the diameter of the cloud's bounding box.
  double r0 = 0.0;
  int rungs = 12;
  /// A rung is usable when n / occupied >= min_per_cube ...
  double min_per_cube = 10.0;
  /// ... and at least this many cubes are occupied.
  std::size_t min_cubes = 5;
};

struct CorrelationOptions {
  /// Only the first max_points points are used as centres and neighbours.
  std::size_t max_points = 20000;
  /// Count other points only and divide by falling factorials, which makes the
  /// sum an unbiased estimate of the integral for integer q.
  bool exclude_self = true;
};

struct MomentLadder {
  double q = 2.0;
  EstimatorForm form = EstimatorForm::mesh;
  std::size_t n = 0;
  std::vector<double> radii;
  std::vector<double> sums;
  std::vector<std::size_t> occupied;
  std::vector<bool> usable;
};

struct DimEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  /// Inclusive ladder indices of the regression window.
  int l_min = 0;
  int l_max = 0;
  double q = 0.0;
  EstimatorForm form = EstimatorForm::mesh;
  /// Slope before clamping to [0, N].
  double raw_slope = 0.0;
  bool clamped = false;
};

double bounding_box_diameter(const PointCloud& cloud);

/// Cubes anchored at the origin: [j r, (j + 1) r) per coordinate.
double mesh_moment_sum(const PointCloud& cloud, double r, double q);
/// Same sum from precomputed cell counts.
double moment_from_counts(const std::vector<std::uint64_t>& counts, std::size_t n, double q);

double correlation_integral(const PointCloud& cloud, double r, int q, const CorrelationOptions& opts = {});

/// One ladder per q, sharing the cell histograms.
std::vector<MomentLadder> mesh_ladders(const PointCloud& cloud, const std::vector<double>& qs,
                                       const LadderOptions& opts = {});
MomentLadder mesh_ladder(const PointCloud& cloud, double q, const LadderOptions& opts = {});
MomentLadder correlation_ladder(const PointCloud& cloud, int q, const LadderOptions& opts = {},
                                const CorrelationOptions& copts = {});

/// Longest contiguous run of usable rungs (first one on ties), or {-1, -1}.
std::pair<int, int> select_window(const MomentLadder& ladder);

/// Least-squares slope over the selected window. Throws InsufficientData when
/// fewer than 3 usable contiguous rungs exist.
DimEstimate estimate_dimension(const MomentLadder& ladder, int dim);
/// Regression over an explicit window.
DimEstimate estimate_dimension(const MomentLadder& ladder, int dim, int l_min, int l_max);

/// Per-rung report: r, M_r(q), occupied, used.
std::string ladder_csv(const MomentLadder& ladder, const DimEstimate* est);

}  // namespace qdim
