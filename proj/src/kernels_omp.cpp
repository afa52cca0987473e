// OpenMP kernels. Work is split into pieces whose boundaries do not depend on
// the thread count, and partial results are combined in piece order, so the
// output is bit-identical for any number of threads.

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"
#include "qdim/rng.hpp"

namespace qdim::kernels::omp {

namespace {

constexpr std::uint64_t kChunk = 1u << 13;

// Depth at which subtrees are handed out as independent tasks.
int split_depth(int m, int depth) {
  int d = 0;
  std::uint64_t count = 1;
  while (d < depth && count < 256) {
    count *= static_cast<std::uint64_t>(m);
    ++d;
  }
  return d;
}

struct TableFrame {
  const AffineIFS& ifs;
  const MeasureModel& model;
  WordTable& table;
};

void table_dfs(const TableFrame& f, int k, std::uint64_t idx, int last, const Matrix& t, double log_mass) {
  const int m = f.table.m;
  for (int c = 0; c < m; ++c) {
    const Matrix tc = t * f.ifs.map(c).matrix();
    const double lm = log_mass + f.model.log_transition(last, c);
    const std::uint64_t child = idx * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(c);
    auto& sv = f.table.log_sv[static_cast<std::size_t>(k + 1)];
    detail::store_log_sv(singular_values(tc), sv.data() + child * static_cast<std::uint64_t>(f.table.dim));
    f.table.log_mass[static_cast<std::size_t>(k + 1)][child] = lm;
    if (k + 1 < f.table.depth) table_dfs(f, k + 1, child, c, tc, lm);
  }
}

}  // namespace

WordTable build_word_table(const AffineIFS& ifs, const MeasureModel& model, int depth) {
  WordTable t;
  t.m = ifs.size();
  t.dim = ifs.dim();
  t.depth = depth;
  t.log_sv.resize(static_cast<std::size_t>(depth) + 1);
  t.log_mass.resize(static_cast<std::size_t>(depth) + 1);
  t.log_mass[0] = {0.0};
  t.log_sv[0].assign(static_cast<std::size_t>(t.dim), 0.0);
  for (int k = 1; k <= depth; ++k) {
    const std::uint64_t count = detail::ipow(t.m, k);
    t.log_sv[static_cast<std::size_t>(k)].resize(count * static_cast<std::uint64_t>(t.dim));
    t.log_mass[static_cast<std::size_t>(k)].resize(count);
  }
  const int d0 = split_depth(t.m, depth);
  for (int k = 1; k <= d0; ++k) {
    const std::uint64_t count = detail::ipow(t.m, k);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      const Word w = Word::from_index(idx, k, t.m);
      detail::store_log_sv(singular_values(compose(ifs, w)),
                           t.log_sv[static_cast<std::size_t>(k)].data() + idx * static_cast<std::uint64_t>(t.dim));
      t.log_mass[static_cast<std::size_t>(k)][idx] = model.log_cylinder_mass(w);
    }
  }
  if (d0 == depth) return t;
  const TableFrame frame{ifs, model, t};
  const auto tasks = static_cast<std::int64_t>(detail::ipow(t.m, d0));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const Word w = Word::from_index(static_cast<std::uint64_t>(task), d0, t.m);
    table_dfs(frame, d0, static_cast<std::uint64_t>(task), w[w.size() - 1], compose(ifs, w),
              t.log_mass[static_cast<std::size_t>(d0)][static_cast<std::uint64_t>(task)]);
  }
  return t;
}

double log_weighted_sum(const WordTable& table, int k, double s, double phi_exp, double mass_exp) {
  if (k < 0 || k > table.depth) throw InvalidInput("log_weighted_sum: level outside the table");
  if (k == 0) return 0.0;
  const auto& sv = table.log_sv[static_cast<std::size_t>(k)];
  const auto& mass = table.log_mass[static_cast<std::size_t>(k)];
  const std::uint64_t count = mass.size();
  const auto chunks = static_cast<std::int64_t>((count + kChunk - 1) / kChunk);
  std::vector<detail::LogSum> partial(static_cast<std::size_t>(chunks));
  const int dim = table.dim;
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    detail::LogSum acc;
    const std::uint64_t lo = static_cast<std::uint64_t>(c) * kChunk, hi = std::min(count, lo + kChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      acc.add(phi_exp * log_phi_from_logs(sv.data() + i * static_cast<std::uint64_t>(dim), dim, s) +
              mass_exp * mass[i]);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  detail::LogSum total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

namespace {

struct SumsFrame {
  const AffineIFS& ifs;
  const MeasureModel& model;
  double s, a, b;
  int k_max;
};

void sums_dfs(const SumsFrame& f, int depth, int last, const Matrix& t, double log_mass,
              std::vector<detail::LogSum>& acc) {
  for (int c = 0; c < f.ifs.size(); ++c) {
    const Matrix tc = t * f.ifs.map(c).matrix();
    const double lm = log_mass + (last < 0 ? f.model.log_initial(c) : f.model.log_transition(last, c));
    acc[static_cast<std::size_t>(depth + 1)].add(f.a * log_phi_s(singular_values(tc), f.s) + f.b * lm);
    if (depth + 1 < f.k_max) sums_dfs(f, depth + 1, c, tc, lm, acc);
  }
}

}  // namespace

std::vector<double> log_weighted_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double phi_exp,
                                      double mass_exp, int k_max) {
  std::vector<detail::LogSum> acc(static_cast<std::size_t>(k_max) + 1);
  acc[0].add(0.0);
  const SumsFrame frame{ifs, model, s, phi_exp, mass_exp, k_max};
  const int d0 = split_depth(ifs.size(), k_max);
  // Levels 1..d0 directly.
  for (int k = 1; k <= d0; ++k) {
    const std::uint64_t count = detail::ipow(ifs.size(), k);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      const Word w = Word::from_index(idx, k, ifs.size());
      acc[static_cast<std::size_t>(k)].add(phi_exp * log_phi_s(singular_values(compose(ifs, w)), s) +
                                           mass_exp * model.log_cylinder_mass(w));
    }
  }
  if (d0 < k_max) {
    const auto tasks = static_cast<std::int64_t>(detail::ipow(ifs.size(), d0));
    std::vector<std::vector<detail::LogSum>> partial(static_cast<std::size_t>(tasks),
                                                     std::vector<detail::LogSum>(acc.size()));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t task = 0; task < tasks; ++task) {
      const Word w = Word::from_index(static_cast<std::uint64_t>(task), d0, ifs.size());
      sums_dfs(frame, d0, w[w.size() - 1], compose(ifs, w), model.log_cylinder_mass(w),
               partial[static_cast<std::size_t>(task)]);
    }
    for (const auto& p : partial)
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k].merge(p[k]);
  }
  std::vector<double> out;
  for (const auto& a : acc) out.push_back(a.value());
  return out;
}

std::vector<double> sample_cloud(const AffineIFS& ifs, const MeasureModel& model, const DisplacementField& field,
                                 std::size_t n, int depth, std::uint64_t words_seed) {
  const auto d = static_cast<std::size_t>(ifs.dim());
  std::vector<double> coords(n * d);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    CounterStream stream(words_seed, i);
    const Word w = model.sample_word(depth, [&] { return stream.uniform(); });
    project_into(ifs, w, depth, [&](DisplacementField::Key k, double* out) { field.displacement(k, out); },
                 coords.data() + i * d);
  }
  return coords;
}

namespace {

std::vector<detail::CellKey> sorted_keys(std::span<const double> coords, int dim, double r) {
  const std::size_t n = coords.size() / static_cast<std::size_t>(dim);
  std::vector<detail::CellKey> keys(n);
  const double inv_r = 1.0 / r;
  bool overflow = false;
#pragma omp parallel for schedule(static) reduction(|| : overflow)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      keys[static_cast<std::size_t>(i)] = detail::cell_of(coords.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim), dim, inv_r);
    } catch (const Error&) {
      overflow = true;
    }
  }
  if (overflow) throw InvalidInput("mesh cell index overflow; radius too small for the cloud extent");
  // Sort fixed shards independently, then merge pairwise.
  constexpr std::size_t kShards = 16;
  std::vector<std::size_t> bounds(kShards + 1);
  for (std::size_t s = 0; s <= kShards; ++s) bounds[s] = n * s / kShards;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(kShards); ++s) {
    std::sort(keys.begin() + static_cast<std::ptrdiff_t>(bounds[static_cast<std::size_t>(s)]),
              keys.begin() + static_cast<std::ptrdiff_t>(bounds[static_cast<std::size_t>(s) + 1]));
  }
  for (std::size_t width = 1; width < kShards; width *= 2) {
    const auto pairs = static_cast<std::int64_t>(kShards / (2 * width));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 0; p < pairs; ++p) {
      const std::size_t lo = bounds[static_cast<std::size_t>(p) * 2 * width];
      const std::size_t mid = bounds[static_cast<std::size_t>(p) * 2 * width + width];
      const std::size_t hi = bounds[static_cast<std::size_t>(p) * 2 * width + 2 * width];
      std::inplace_merge(keys.begin() + static_cast<std::ptrdiff_t>(lo), keys.begin() + static_cast<std::ptrdiff_t>(mid),
                         keys.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  return keys;
}

}  // namespace

CellCounts mesh_counts(std::span<const double> coords, int dim, double r) {
  const auto keys = sorted_keys(coords, dim, r);
  CellCounts out;
  detail::run_lengths(keys, out);
  return out;
}

std::vector<std::uint32_t> ball_counts(std::span<const double> coords, int dim, std::size_t n, double r) {
  // Uniform grid of cell size r: neighbours within r lie in adjacent cells.
  const auto d = static_cast<std::size_t>(dim);
  std::vector<std::pair<detail::CellKey, std::uint32_t>> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = {detail::cell_of(coords.data() + i * d, dim, 1.0 / r), static_cast<std::uint32_t>(i)};
  std::sort(items.begin(), items.end());
  std::vector<detail::CellKey> cells;
  std::vector<std::size_t> start;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || items[i].first != items[i - 1].first) {
      cells.push_back(items[i].first);
      start.push_back(i);
    }
  }
  start.push_back(n);
  int offsets = 1;
  for (int c = 0; c < dim; ++c) offsets *= 3;
  const double r2 = r * r;
  std::vector<std::uint32_t> out(n, 0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* x = coords.data() + i * d;
    const detail::CellKey home = detail::cell_of(x, dim, 1.0 / r);
    std::uint32_t count = 0;
    for (int o = 0; o < offsets; ++o) {
      detail::CellKey nb = home;
      int code = o;
      for (int c = 0; c < dim; ++c) {
        nb[static_cast<std::size_t>(c)] += code % 3 - 1;
        code /= 3;
      }
      const auto it = std::lower_bound(cells.begin(), cells.end(), nb);
      if (it == cells.end() || *it != nb) continue;
      const auto cidx = static_cast<std::size_t>(it - cells.begin());
      for (std::size_t p = start[cidx]; p < start[cidx + 1]; ++p) {
        const std::size_t j = items[p].second;
        if (j == i) continue;
        const double* y = coords.data() + j * d;
        double dist2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) dist2 += (x[c] - y[c]) * (x[c] - y[c]);
        if (dist2 <= r2) ++count;
      }
    }
    out[i] = count;
  }
  return out;
}

std::vector<double> truncated_inner_sums(const TruncatedEnergyInput& in) {
  detail::check_energy_input(in);
  std::vector<double> out(in.log_mass.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(out.size()); ++j) {
    out[static_cast<std::size_t>(j)] = detail::inner_sum_for(static_cast<std::uint64_t>(j), in);
  }
  return out;
}

}  // namespace qdim::kernels::omp
