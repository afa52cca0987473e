#include "qdim/dimsolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "qdim/error.hpp"
#include "kernels_common.hpp"

namespace qdim {

namespace {

void check_q(double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidInput("q must be a finite number greater than 1");
}

void check_s(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("s must be positive and finite");
}

void check_pair(const AffineIFS& ifs, const MeasureModel& model) {
  if (ifs.size() != model.size()) {
    throw InvalidInput("measure has " + std::to_string(model.size()) + " symbols but there are " +
                       std::to_string(ifs.size()) + " maps");
  }
}

int table_depth(int m, const SolverOptions& opts) {
  if (opts.k_max > 0) {
    if (words_up_to(m, opts.k_max) > opts.table_budget * 4) {
      throw ResourceLimit("table depth " + std::to_string(opts.k_max) + " exceeds the word budget");
    }
    return opts.k_max;
  }
  int k = 1;
  while (words_up_to(m, k + 1) <= opts.table_budget) ++k;
  return std::max(k, 2);
}

}  // namespace

std::vector<double> log_moment_sums(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max,
                                    std::uint64_t budget) {
  check_pair(ifs, model);
  check_s(s);
  if (!(q >= 1.0)) throw InvalidInput("q must be at least 1");
  if (k_max < 0) throw InvalidInput("depth must be nonnegative");
  if (words_up_to(ifs.size(), k_max) > budget) {
    throw ResourceLimit("moment sum to depth " + std::to_string(k_max) + " needs more than " + std::to_string(budget) +
                        " terms");
  }
  return kernels::omp::log_weighted_sums(ifs, model, s, 1.0 - q, q, k_max);
}

double moment_sum(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k, std::uint64_t budget) {
  return std::exp(log_moment_sums(ifs, model, s, q, k, budget).back());
}

MomentTable::MomentTable(const AffineIFS& ifs, const MeasureModel& model, const SolverOptions& opts)
    : min_ratio_(model.min_concatenation_ratio()) {
  check_pair(ifs, model);
  table_ = kernels::omp::build_word_table(ifs, model, table_depth(ifs.size(), opts));
}

double MomentTable::log_sum(int k, double s, double q) const {
  return kernels::omp::log_weighted_sum(table_, k, s, 1.0 - q, q);
}

double MomentTable::supermultiplicative_constant(double q) const { return std::pow(std::min(1.0, min_ratio_), q); }

GrowthRate MomentTable::growth_rate(double s, double q) const {
  check_s(s);
  check_q(q);
  const double log_c = std::log(supermultiplicative_constant(q));
  GrowthRate g;
  g.k_max = table_.depth;
  double best = -INFINITY, prev = 0.0, last = 0.0;
  for (int k = 1; k <= table_.depth; ++k) {
    const double lk = log_sum(k, s, q);
    best = std::max(best, (log_c + lk) / k);
    prev = last;
    last = lk;
  }
  g.estimate = std::exp(last / table_.depth);
  g.lower_bound = std::exp(best);
  g.ratio = std::exp(last - prev);
  return g;
}

double MomentTable::affinity_rate(double s) const {
  check_s(s);
  double best = INFINITY;
  for (int k = 1; k <= table_.depth; ++k) best = std::min(best, kernels::omp::log_weighted_sum(table_, k, s, 1.0, 0.0) / k);
  return std::exp(best);
}

GrowthRate growth_rate(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max) {
  if (k_max < 2) throw InvalidInput("growth_rate needs k_max >= 2");
  SolverOptions opts;
  opts.k_max = k_max;
  opts.table_budget = 20'000'000;
  return MomentTable(ifs, model, opts).growth_rate(s, q);
}

namespace {

struct Bracket {
  double lo, hi, f_lo, f_hi;
  int iterations;
};

// Root of an increasing function `rate(s) - 1` (or decreasing when `increasing` is false).
Bracket bisect(const std::function<double(double)>& rate, bool increasing, double s_lo, double s_hi, double tol) {
  auto below = [&](double r) { return increasing ? r < 1.0 : r > 1.0; };
  double f_lo = rate(s_lo), f_hi = rate(s_hi);
  int expansions = 0;
  while (below(f_hi) && expansions < 6) {
    s_lo = s_hi;
    f_lo = f_hi;
    s_hi *= 2.0;
    f_hi = rate(s_hi);
    ++expansions;
  }
  if (!below(f_lo) || below(f_hi)) {
    throw NoRoot("growth rate does not cross 1 on [" + std::to_string(s_lo) + ", " + std::to_string(s_hi) +
                 "]: rates " + std::to_string(f_lo) + " and " + std::to_string(f_hi));
  }
  int it = 0;
  while (s_hi - s_lo > tol && it < 200) {
    const double mid = 0.5 * (s_lo + s_hi);
    const double f = rate(mid);
    if (below(f)) {
      s_lo = mid;
      f_lo = f;
    } else {
      s_hi = mid;
      f_hi = f;
    }
    ++it;
  }
  return {s_lo, s_hi, f_lo, f_hi, it};
}

}  // namespace

DimensionResult d_q_minus(const MomentTable& table, double q, double tol) {
  check_q(q);
  if (!(tol >= 1e-12)) throw InvalidInput("tolerance must be at least 1e-12");
  const auto b = bisect([&](double s) { return table.growth_rate(s, q).lower_bound; }, true, 1e-6,
                        2.0 * table.dim(), tol);
  DimensionResult r;
  r.q = q;
  r.d_q = 0.5 * (b.lo + b.hi);
  r.k_max = table.k_max();
  r.iterations = b.iterations;
  r.s_lo = b.lo;
  r.s_hi = b.hi;
  r.rate_lo = b.f_lo;
  r.rate_hi = b.f_hi;
  return r;
}

DimensionResult d_q_minus(const AffineIFS& ifs, const MeasureModel& model, double q, const SolverOptions& opts) {
  return d_q_minus(MomentTable(ifs, model, opts), q, opts.tol);
}

namespace {

struct CutFrame {
  const AffineIFS& ifs;
  const MeasureModel& model;
  double s, q, log_rho;
  int j, l_max;
  std::size_t budget;
  std::size_t visited = 0;
  std::vector<detail::LogSum> acc;
};

void cut_dfs(CutFrame& f, int last, const Matrix& t, double log_mass, double log_alpha_parent) {
  for (int c = 0; c < f.ifs.size(); ++c) {
    if (++f.visited > f.budget) {
      throw ResourceLimit("cut-set traversal exceeds " + std::to_string(f.budget) + " words");
    }
    const Matrix tc = t * f.ifs.map(c).matrix();
    const double lm = log_mass + (last < 0 ? f.model.log_initial(c) : f.model.log_transition(last, c));
    const SingularValues sv = singular_values(tc);
    const double la = std::log(sv[f.j - 1]);
    // w is in J(rho^l) iff alpha_j(T_w) <= rho^l < alpha_j(T_parent).
    const int l_first = std::max(1, static_cast<int>(std::floor(log_alpha_parent / f.log_rho)) + 1);
    const int l_last = std::min(f.l_max, static_cast<int>(std::floor(la / f.log_rho)));
    if (l_first <= l_last) {
      const double term = (1.0 - f.q) * log_phi_s(sv, f.s) + f.q * lm;
      for (int l = l_first; l <= l_last; ++l) f.acc[static_cast<std::size_t>(l)].add(term);
    }
    if (la > f.l_max * f.log_rho) cut_dfs(f, c, tc, lm, la);
  }
}

}  // namespace

std::vector<double> d_q_plus_cutset(const AffineIFS& ifs, const MeasureModel& model, double q, double s, double rho,
                                    int l_max, std::size_t budget) {
  check_pair(ifs, model);
  check_q(q);
  if (!(s > 0.0) || s > ifs.dim()) throw InvalidInput("cut-set sums need s in (0, N]");
  if (!(rho > 0.0) || !(rho < 1.0)) throw InvalidInput("rho must lie in (0, 1)");
  if (l_max < 1) throw InvalidInput("l_max must be at least 1");
  CutFrame f{ifs, model, s, q, std::log(rho), phi_index(s, ifs.dim()), l_max, budget, 0, {}};
  f.acc.resize(static_cast<std::size_t>(l_max) + 1);
  cut_dfs(f, -1, Matrix::identity(ifs.dim()), 0.0, 0.0);
  std::vector<double> out;
  for (int l = 1; l <= l_max; ++l) out.push_back(std::exp(f.acc[static_cast<std::size_t>(l)].value()));
  return out;
}

double affinity_dimension(const MomentTable& table, double tol) {
  const auto b = bisect([&](double s) { return table.affinity_rate(s); }, false, 1e-6, 2.0 * table.dim(), tol);
  return 0.5 * (b.lo + b.hi);
}

double affinity_dimension(const AffineIFS& ifs, double tol, const SolverOptions& opts) {
  std::vector<double> uniform(static_cast<std::size_t>(ifs.size()), 1.0 / ifs.size());
  uniform.back() = 1.0 - (ifs.size() - 1) * (1.0 / ifs.size());
  return affinity_dimension(MomentTable(ifs, MeasureModel::bernoulli(uniform), opts), tol);
}

double closed_form_d_q(const Matrix& t, const std::vector<double>& probs, double q) {
  check_q(q);
  double sum = 0.0;
  for (double p : probs) sum += std::pow(p, q);
  const double log_r = std::log(sum) / (q - 1.0);
  const SingularValues sv = singular_values(t);
  double cum = 0.0;
  for (int j = 1; j <= sv.dim; ++j) {
    const double la = std::log(sv[j - 1]);
    if (log_r >= cum + la) return (j - 1) + (log_r - cum) / la;
    cum += la;
  }
  return sv.dim * log_r / cum;
}

PhaseScan phase_transition_scan(const MomentTable& table, const std::vector<double>& q_grid, double tol) {
  if (q_grid.size() < 3) throw InvalidInput("phase scan needs at least three grid points");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    check_q(q_grid[i]);
    if (i && !(q_grid[i] > q_grid[i - 1])) throw InvalidInput("q grid must be strictly increasing");
  }
  PhaseScan scan;
  scan.q = q_grid;
  scan.d_q.resize(q_grid.size());
  for (std::size_t i = 0; i < q_grid.size(); ++i) scan.d_q[i] = d_q_minus(table, q_grid[i], tol).d_q;

  const std::size_t n = q_grid.size();
  scan.slope_jump.assign(n, 0.0);
  std::vector<double> mags;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double left = (scan.d_q[i] - scan.d_q[i - 1]) / (q_grid[i] - q_grid[i - 1]);
    const double right = (scan.d_q[i + 1] - scan.d_q[i]) / (q_grid[i + 1] - q_grid[i]);
    scan.slope_jump[i] = right - left;
    mags.push_back(std::abs(right - left));
  }
  double h_min = INFINITY;
  for (std::size_t i = 1; i < n; ++i) h_min = std::min(h_min, q_grid[i] - q_grid[i - 1]);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
  const double median = mags[mags.size() / 2];
  scan.noise_floor = std::max(4.0 * tol / h_min, median);
  const double threshold = 5.0 * scan.noise_floor;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = std::abs(scan.slope_jump[i]);
    if (a <= threshold) continue;
    const bool left_ok = i == 1 || a >= std::abs(scan.slope_jump[i - 1]);
    const bool right_ok = i + 2 == n || a > std::abs(scan.slope_jump[i + 1]);
    if (left_ok && right_ok) scan.kinks.push_back(i);
  }
  return scan;
}

}  // namespace qdim
