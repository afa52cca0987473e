// Reference kernels: single-threaded, written for clarity.

#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"
#include "qdim/rng.hpp"

namespace qdim {

double log_phi_from_logs(const double* log_sv, int dim, double s) noexcept {
  double acc = 0.0;
  if (s > dim) {
    for (int i = 0; i < dim; ++i) acc += log_sv[i];
    return acc * s / dim;
  }
  const int j = phi_index(s, dim);
  for (int i = 0; i < j - 1; ++i) acc += log_sv[i];
  return acc + (s - j + 1) * log_sv[j - 1];
}

std::uint64_t words_up_to(int m, int depth) noexcept {
  std::uint64_t total = 0, level = 1;
  for (int k = 1; k <= depth; ++k) {
    if (level > UINT64_MAX / static_cast<std::uint64_t>(m)) return UINT64_MAX;
    level *= static_cast<std::uint64_t>(m);
    if (total > UINT64_MAX - level) return UINT64_MAX;
    total += level;
  }
  return total;
}

namespace kernels::serial {

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
    auto& sv = t.log_sv[static_cast<std::size_t>(k)];
    auto& mass = t.log_mass[static_cast<std::size_t>(k)];
    sv.resize(count * static_cast<std::uint64_t>(t.dim));
    mass.resize(count);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      const Word w = Word::from_index(idx, k, t.m);
      detail::store_log_sv(singular_values(compose(ifs, w)), sv.data() + idx * static_cast<std::uint64_t>(t.dim));
      mass[idx] = model.log_cylinder_mass(w);
    }
  }
  return t;
}

double log_weighted_sum(const AffineIFS& ifs, const MeasureModel& model, int k, double s, double phi_exp,
                        double mass_exp) {
  if (k == 0) return 0.0;
  detail::LogSum acc;
  const std::uint64_t count = detail::ipow(ifs.size(), k);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const Word w = Word::from_index(idx, k, ifs.size());
    acc.add(phi_exp * log_phi_s(singular_values(compose(ifs, w)), s) + mass_exp * model.log_cylinder_mass(w));
  }
  return acc.value();
}

namespace {

void sums_dfs(const AffineIFS& ifs, const MeasureModel& model, double s, double a, double b, int k_max, int depth,
              int last, const Matrix& t, double log_mass, std::vector<detail::LogSum>& acc) {
  for (int c = 0; c < ifs.size(); ++c) {
    const Matrix tc = t * ifs.map(c).matrix();
    const double lm = log_mass + (last < 0 ? model.log_initial(c) : model.log_transition(last, c));
    acc[static_cast<std::size_t>(depth + 1)].add(a * log_phi_s(singular_values(tc), s) + b * lm);
    if (depth + 1 < k_max) sums_dfs(ifs, model, s, a, b, k_max, depth + 1, c, tc, lm, acc);
  }
}

}  // namespace

std::vector<double> log_weighted_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double phi_exp,
                                      double mass_exp, int k_max) {
  std::vector<detail::LogSum> acc(static_cast<std::size_t>(k_max) + 1);
  acc[0].add(0.0);
  if (k_max > 0) sums_dfs(ifs, model, s, phi_exp, mass_exp, k_max, 0, -1, Matrix::identity(ifs.dim()), 0.0, acc);
  std::vector<double> out;
  for (const auto& a : acc) out.push_back(a.value());
  return out;
}

std::vector<double> sample_cloud(const AffineIFS& ifs, const MeasureModel& model, const DisplacementField& field,
                                 std::size_t n, int depth, std::uint64_t words_seed) {
  const auto d = static_cast<std::size_t>(ifs.dim());
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    CounterStream stream(words_seed, i);
    const Word w = model.sample_word(depth, [&] { return stream.uniform(); });
    project_into(ifs, w, depth, [&](DisplacementField::Key k, double* out) { field.displacement(k, out); },
                 coords.data() + i * d);
  }
  return coords;
}

CellCounts mesh_counts(std::span<const double> coords, int dim, double r) {
  const std::size_t n = coords.size() / static_cast<std::size_t>(dim);
  std::vector<detail::CellKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = detail::cell_of(coords.data() + i * static_cast<std::size_t>(dim), dim, 1.0 / r);
  std::sort(keys.begin(), keys.end());
  CellCounts out;
  detail::run_lengths(keys, out);
  return out;
}

std::vector<std::uint32_t> ball_counts(std::span<const double> coords, int dim, std::size_t n, double r) {
  // Brute force over all pairs.
  std::vector<std::uint32_t> out(n, 0);
  const double r2 = r * r;
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double dist2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = coords[i * d + c] - coords[j * d + c];
        dist2 += diff * diff;
      }
      if (dist2 <= r2) ++out[i];
    }
  return out;
}

std::vector<double> truncated_inner_sums(const TruncatedEnergyInput& in) {
  detail::check_energy_input(in);
  std::vector<double> out(in.log_mass.size());
  for (std::uint64_t j = 0; j < out.size(); ++j) out[j] = detail::inner_sum_for(j, in);
  return out;
}

}  // namespace kernels::serial
}  // namespace qdim
