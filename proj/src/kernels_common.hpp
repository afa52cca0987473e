#pragma once

// Internals shared by the serial and OpenMP kernel builds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qdim/error.hpp"
#include "qdim/kernels.hpp"
#include "qdim/sampler.hpp"

namespace qdim::detail {

/// Running log-sum-exp accumulator.
struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double x) noexcept {
    if (x <= max) {
      sum += std::exp(x - max);
    } else {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
    }
  }
  void merge(const LogSum& o) noexcept {
    if (o.sum == 0.0) return;
    if (sum == 0.0) {
      *this = o;
      return;
    }
    if (o.max <= max) {
      sum += o.sum * std::exp(o.max - max);
    } else {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    }
  }
  double value() const noexcept { return sum == 0.0 ? -std::numeric_limits<double>::infinity() : max + std::log(sum); }
};

inline std::uint64_t ipow(int m, int k) {
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r *= static_cast<std::uint64_t>(m);
  return r;
}

inline void store_log_sv(const SingularValues& sv, double* out) noexcept {
  for (int i = 0; i < sv.dim; ++i) out[i] = std::log(sv.values[i]);
}

using CellKey = std::array<std::int32_t, kMaxDim>;

inline CellKey cell_of(const double* x, int dim, double inv_r) {
  CellKey key{};
  for (int c = 0; c < dim; ++c) {
    const double f = std::floor(x[c] * inv_r);
    if (!(std::abs(f) < 2.0e9)) throw InvalidInput("mesh cell index overflow; radius too small for the cloud extent");
    key[static_cast<std::size_t>(c)] = static_cast<std::int32_t>(f);
  }
  return key;
}

/// Count runs of equal keys in a sorted range.
inline void run_lengths(const std::vector<CellKey>& sorted, CellCounts& out) {
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.push_back(j - i);
    i = j;
  }
}

/// log of the inverse multienergy kernel for rays given as depth-D word
/// indices. For sorted rays the join vertices, with multiplicity, are the
/// joins of consecutive rays; identical rays join at their own leaf.
inline double log_inverse_kernel(std::uint64_t* rays, int count, const TruncatedEnergyInput& in) noexcept {
  std::sort(rays, rays + count);
  double acc = 0.0;
  const auto m = static_cast<std::uint64_t>(in.m);
  for (int t = 0; t + 1 < count; ++t) {
    std::uint64_t a = rays[t], b = rays[t + 1];
    int level = in.depth;
    while (a != b) {
      a /= m;
      b /= m;
      --level;
    }
    if (level > 0) acc -= in.log_phi[in.level_offset[static_cast<std::size_t>(level)] + a];
  }
  return acc;
}

/// Inner sum for one outer ray j by odometer over inner n-tuples.
inline double inner_sum_for(std::uint64_t j, const TruncatedEnergyInput& in) {
  const std::uint64_t leaves = in.log_mass.size();
  const int n = in.inner;
  std::array<std::uint64_t, 8> idx{};
  std::array<std::uint64_t, 9> rays{};
  double total = 0.0;
  for (;;) {
    double log_w = 0.0;
    for (int t = 0; t < n; ++t) {
      rays[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t)];
      log_w += in.log_mass[idx[static_cast<std::size_t>(t)]];
    }
    rays[static_cast<std::size_t>(n)] = j;
    log_w += log_inverse_kernel(rays.data(), n + 1, in);
    total += std::exp(log_w);
    int t = 0;
    while (t < n && ++idx[static_cast<std::size_t>(t)] == leaves) idx[static_cast<std::size_t>(t++)] = 0;
    if (t == n) break;
  }
  return total;
}

inline void check_energy_input(const TruncatedEnergyInput& in) {
  if (in.inner < 1 || in.inner > 7) throw InvalidInput("truncated multienergy supports 1..7 inner rays");
  if (in.log_mass.size() != ipow(in.m, in.depth)) throw InvalidInput("truncated multienergy: mass table size");
}

}  // namespace qdim::detail
