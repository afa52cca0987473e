#include "qdim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdim/error.hpp"
#include "qdim/kernels.hpp"
#include "qdim/util.hpp"

namespace qdim {

std::string to_string(EstimatorForm f) { return f == EstimatorForm::mesh ? "mesh" : "correlation"; }

namespace {

void check_cloud(const PointCloud& cloud) {
  if (cloud.size() == 0 || cloud.dim < 1) throw InvalidInput("empty point cloud");
}

std::vector<double> ladder_radii(const PointCloud& cloud, const LadderOptions& opts) {
  if (!(opts.rho > 0.0) || !(opts.rho < 1.0)) throw InvalidInput("ladder rho must lie in (0, 1)");
  if (opts.rungs < 3) throw InvalidInput("ladder needs at least 3 rungs");
  double r0 = opts.r0 > 0.0 ? opts.r0 : bounding_box_diameter(cloud);
  if (!(r0 > 0.0)) throw InsufficientData("cloud has zero extent; no radius ladder");
  std::vector<double> radii;
  for (int l = 0; l < opts.rungs; ++l) {
    radii.push_back(r0);
    r0 *= opts.rho;
  }
  return radii;
}

bool rung_usable(std::size_t n, std::size_t occupied, const LadderOptions& opts) {
  return occupied >= opts.min_cubes && static_cast<double>(n) >= opts.min_per_cube * static_cast<double>(occupied);
}

}  // namespace

double bounding_box_diameter(const PointCloud& cloud) {
  check_cloud(cloud);
  const auto d = static_cast<std::size_t>(cloud.dim);
  double acc = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      lo = std::min(lo, cloud.coords[i * d + c]);
      hi = std::max(hi, cloud.coords[i * d + c]);
    }
    acc += (hi - lo) * (hi - lo);
  }
  return std::sqrt(acc);
}

double moment_from_counts(const std::vector<std::uint64_t>& counts, std::size_t n, double q) {
  double acc = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto c : counts) acc += std::pow(static_cast<double>(c) * inv_n, q);
  return acc;
}

double mesh_moment_sum(const PointCloud& cloud, double r, double q) {
  check_cloud(cloud);
  if (!(r > 0.0)) throw InvalidInput("mesh radius must be positive");
  if (!(q > 1.0)) throw InvalidInput("q must exceed 1");
  return moment_from_counts(kernels::omp::mesh_counts(cloud.coords, cloud.dim, r), cloud.size(), q);
}

double correlation_integral(const PointCloud& cloud, double r, int q, const CorrelationOptions& opts) {
  check_cloud(cloud);
  if (q < 2) throw InvalidInput("correlation form needs integer q >= 2");
  if (!(r > 0.0)) throw InvalidInput("ball radius must be positive");
  const std::size_t n = std::min(cloud.size(), opts.max_points);
  if (n < static_cast<std::size_t>(q)) throw InvalidInput("correlation form needs at least q points");
  const auto counts = kernels::omp::ball_counts(cloud.coords, cloud.dim, n, r);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double term = 1.0;
    if (opts.exclude_self) {
      // Falling factorials: c (c-1) ... (c-q+2) / ((n-1) (n-2) ... (n-q+1)).
      for (int t = 0; t < q - 1; ++t) {
        term *= (static_cast<double>(counts[i]) - t) / (static_cast<double>(n) - 1.0 - t);
      }
      term = std::max(term, 0.0);
    } else {
      term = std::pow((static_cast<double>(counts[i]) + 1.0) / static_cast<double>(n), q - 1);
    }
    acc += term;
  }
  return acc / static_cast<double>(n);
}

std::vector<MomentLadder> mesh_ladders(const PointCloud& cloud, const std::vector<double>& qs,
                                       const LadderOptions& opts) {
  check_cloud(cloud);
  for (double q : qs)
    if (!(q > 1.0)) throw InvalidInput("q must exceed 1");
  const auto radii = ladder_radii(cloud, opts);
  std::vector<MomentLadder> out(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    out[i].q = qs[i];
    out[i].form = EstimatorForm::mesh;
    out[i].n = cloud.size();
    out[i].radii = radii;
  }
  for (double r : radii) {
    const auto counts = kernels::omp::mesh_counts(cloud.coords, cloud.dim, r);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      out[i].sums.push_back(moment_from_counts(counts, cloud.size(), qs[i]));
      out[i].occupied.push_back(counts.size());
      out[i].usable.push_back(rung_usable(cloud.size(), counts.size(), opts));
    }
  }
  return out;
}

MomentLadder mesh_ladder(const PointCloud& cloud, double q, const LadderOptions& opts) {
  return mesh_ladders(cloud, {q}, opts).front();
}

MomentLadder correlation_ladder(const PointCloud& cloud, int q, const LadderOptions& opts,
                                const CorrelationOptions& copts) {
  check_cloud(cloud);
  MomentLadder ladder;
  ladder.q = q;
  ladder.form = EstimatorForm::correlation;
  ladder.n = std::min(cloud.size(), copts.max_points);
  ladder.radii = ladder_radii(cloud, opts);
  PointCloud sub;
  sub.dim = cloud.dim;
  sub.coords.assign(cloud.coords.begin(),
                    cloud.coords.begin() + static_cast<std::ptrdiff_t>(ladder.n * static_cast<std::size_t>(cloud.dim)));
  for (double r : ladder.radii) {
    const double v = correlation_integral(sub, r, q, copts);
    const auto occupied = kernels::omp::mesh_counts(sub.coords, sub.dim, r).size();
    ladder.sums.push_back(v);
    ladder.occupied.push_back(occupied);
    ladder.usable.push_back(v > 0.0 && rung_usable(ladder.n, occupied, opts));
  }
  return ladder;
}

std::pair<int, int> select_window(const MomentLadder& ladder) {
  int best_lo = -1, best_hi = -1, lo = -1;
  const int n = static_cast<int>(ladder.usable.size());
  for (int i = 0; i <= n; ++i) {
    const bool ok = i < n && ladder.usable[static_cast<std::size_t>(i)];
    if (ok && lo < 0) lo = i;
    if (!ok && lo >= 0) {
      if (best_lo < 0 || (i - 1 - lo) > (best_hi - best_lo)) {
        best_lo = lo;
        best_hi = i - 1;
      }
      lo = -1;
    }
  }
  return {best_lo, best_hi};
}

DimEstimate estimate_dimension(const MomentLadder& ladder, int dim, int l_min, int l_max) {
  if (l_min < 0 || l_max >= static_cast<int>(ladder.radii.size()) || l_max - l_min + 1 < 3) {
    throw InsufficientData("regression window needs at least 3 rungs");
  }
  const int count = l_max - l_min + 1;
  double sx = 0, sy = 0;
  std::vector<double> xs, ys;
  for (int l = l_min; l <= l_max; ++l) {
    const double m = ladder.sums[static_cast<std::size_t>(l)];
    if (!(m > 0.0)) throw InsufficientData("moment sum vanishes on rung " + std::to_string(l));
    xs.push_back((ladder.q - 1.0) * std::log(ladder.radii[static_cast<std::size_t>(l)]));
    ys.push_back(std::log(m));
    sx += xs.back();
    sy += ys.back();
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < count; ++i) {
    sxx += (xs[static_cast<std::size_t>(i)] - mx) * (xs[static_cast<std::size_t>(i)] - mx);
    sxy += (xs[static_cast<std::size_t>(i)] - mx) * (ys[static_cast<std::size_t>(i)] - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0;
  for (int i = 0; i < count; ++i) {
    const double e = ys[static_cast<std::size_t>(i)] - my - slope * (xs[static_cast<std::size_t>(i)] - mx);
    ssr += e * e;
  }
  DimEstimate est;
  est.q = ladder.q;
  est.form = ladder.form;
  est.l_min = l_min;
  est.l_max = l_max;
  est.raw_slope = slope;
  est.stderr_ = std::sqrt(ssr / (count - 2) / sxx);
  est.value = std::clamp(slope, 0.0, static_cast<double>(dim));
  est.clamped = est.value != slope;
  return est;
}

DimEstimate estimate_dimension(const MomentLadder& ladder, int dim) {
  const auto [lo, hi] = select_window(ladder);
  if (lo < 0 || hi - lo + 1 < 3) {
    std::string report = "fewer than 3 contiguous usable rungs (n=" + std::to_string(ladder.n) + "; occupied:";
    for (auto o : ladder.occupied) report += ' ' + std::to_string(o);
    throw InsufficientData(report + ")");
  }
  return estimate_dimension(ladder, dim, lo, hi);
}

std::string ladder_csv(const MomentLadder& ladder, const DimEstimate* est) {
  std::string out = "rung,r,M,occupied,usable,used\n";
  for (std::size_t l = 0; l < ladder.radii.size(); ++l) {
    const bool used = est && static_cast<int>(l) >= est->l_min && static_cast<int>(l) <= est->l_max;
    out += std::to_string(l) + ',' + format_double17(ladder.radii[l]) + ',' + format_double17(ladder.sums[l]) + ',' +
           std::to_string(ladder.occupied[l]) + ',' + (ladder.usable[l] ? "1" : "0") + ',' + (used ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace qdim
