#include "qdim/multienergy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "kernels_common.hpp"
#include "qdim/dimsolver.hpp"
#include "qdim/error.hpp"
#include "qdim/rng.hpp"
#include "qdim/sampler.hpp"

namespace qdim {

namespace {

void check_noninteger_s(double s, int dim) {
  if (!(s > 0.0) || s > dim) throw InvalidInput("s must lie in (0, " + std::to_string(dim) + "]");
  if (s == std::floor(s)) {
    throw InvalidInput("s = " + std::to_string(s) + " is an integer; the transversality bound needs non-integer s");
  }
}

void check_energy_args(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q, int depth) {
  if (ifs.size() != model.size()) throw InvalidInput("measure and maps differ in alphabet size");
  check_noninteger_s(s, ifs.dim());
  if (n < 1) throw InvalidInput("n must be at least 1");
  if (!(q > 1.0) || q > n + 1) throw InvalidInput("need 1 < q <= n + 1");
  if (depth < 1) throw InvalidInput("truncation depth must be at least 1");
}

// One ray with its prefix products T_{w|k}, k = 0..D.
struct Ray {
  std::vector<Symbol> word;
  std::vector<Matrix> prefix;

  void draw(const AffineIFS& ifs, const MeasureModel& model, int depth, CounterStream& rng) {
    word.resize(static_cast<std::size_t>(depth));
    prefix.resize(static_cast<std::size_t>(depth) + 1);
    prefix[0] = Matrix::identity(ifs.dim());
    int prev = -1;
    for (int k = 0; k < depth; ++k) {
      prev = model.draw(prev, rng.uniform());
      word[static_cast<std::size_t>(k)] = static_cast<Symbol>(prev);
      prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] * ifs.map(prev).matrix();
    }
  }
};

std::size_t common_prefix(const Ray& a, const Ray& b) {
  std::size_t k = 0;
  while (k < a.word.size() && a.word[k] == b.word[k]) ++k;
  return k;
}

// log phi^s(rays)^{-1} from the joins of lexicographically consecutive rays;
// false when two rays coincide and the mode rejects that.
bool log_inverse_kernel(std::vector<const Ray*>& rays, double s, JoinResolution mode, double& out) {
  std::sort(rays.begin(), rays.end(), [](const Ray* a, const Ray* b) { return a->word < b->word; });
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < rays.size(); ++t) {
    const std::size_t level = common_prefix(*rays[t], *rays[t + 1]);
    if (level == rays[t]->word.size() && mode == JoinResolution::reject) return false;
    if (level > 0) acc -= log_phi_s(singular_values(rays[t]->prefix[level]), s);
  }
  out = acc;
  return true;
}

}  // namespace

MultiEnergyEstimate mc_multienergy(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                   std::size_t samples, int depth, const MultiEnergyOptions& opts) {
  check_energy_args(ifs, model, s, n, q, depth);
  if (opts.batches < 2) throw InvalidInput("need at least two batches");
  if (opts.inner < 1) throw InvalidInput("inner batch must be at least 1");
  const std::size_t per_batch = std::max<std::size_t>(1, samples / static_cast<std::size_t>(opts.batches));
  const double power = (q - 1.0) / n;

  std::vector<double> batch_mean(static_cast<std::size_t>(opts.batches), 0.0);
  std::vector<std::size_t> batch_fail(static_cast<std::size_t>(opts.batches), 0);
  std::vector<std::size_t> batch_tuples(static_cast<std::size_t>(opts.batches), 0);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < opts.batches; ++b) {
    CounterStream rng(derive_seed(opts.seed, static_cast<std::uint64_t>(b)), 0);
    Ray outer;
    std::vector<Ray> inner(static_cast<std::size_t>(n));
    std::vector<const Ray*> ptrs;
    double acc = 0.0;
    std::size_t used = 0, fails = 0, tuples = 0;
    for (std::size_t o = 0; o < per_batch; ++o) {
      outer.draw(ifs, model, depth, rng);
      double inner_acc = 0.0;
      std::size_t inner_ok = 0;
      for (std::size_t t = 0; t < opts.inner; ++t) {
        ++tuples;
        bool ok = false;
        for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
          ptrs.clear();
          for (auto& r : inner) {
            r.draw(ifs, model, depth, rng);
            ptrs.push_back(&r);
          }
          ptrs.push_back(&outer);
          double lk = 0.0;
          if (log_inverse_kernel(ptrs, s, opts.mode, lk)) {
            inner_acc += std::exp(lk);
            ++inner_ok;
            ok = true;
          }
        }
        if (!ok) ++fails;
      }
      if (inner_ok == 0) continue;
      acc += std::pow(inner_acc / static_cast<double>(inner_ok), power);
      ++used;
    }
    batch_mean[static_cast<std::size_t>(b)] = used ? acc / static_cast<double>(used) : 0.0;
    batch_fail[static_cast<std::size_t>(b)] = fails;
    batch_tuples[static_cast<std::size_t>(b)] = tuples;
  }

  MultiEnergyEstimate est;
  est.n = n;
  est.s = s;
  est.q = q;
  est.outer_power = power;
  est.sample_count = per_batch * static_cast<std::size_t>(opts.batches);
  est.truncation_depth = depth;
  std::size_t tuples = 0;
  double mean = 0.0;
  for (int b = 0; b < opts.batches; ++b) {
    mean += batch_mean[static_cast<std::size_t>(b)];
    est.failures += batch_fail[static_cast<std::size_t>(b)];
    tuples += batch_tuples[static_cast<std::size_t>(b)];
  }
  mean /= opts.batches;
  double var = 0.0;
  for (double v : batch_mean) var += (v - mean) * (v - mean);
  var /= (opts.batches - 1);
  est.value = mean;
  est.stderr_ = std::sqrt(var / opts.batches);
  est.failure_rate = tuples ? static_cast<double>(est.failures) / static_cast<double>(tuples) : 0.0;
  if (est.failure_rate > 0.01) {
    throw DepthInsufficient("join resolution failed for " + std::to_string(est.failure_rate * 100.0) +
                            "% of sampled tuples at depth " + std::to_string(depth));
  }
  return est;
}

namespace {

TruncatedEnergyInput energy_input(const WordTable& table, double s, int n) {
  TruncatedEnergyInput in;
  in.m = table.m;
  in.depth = table.depth;
  in.inner = n;
  std::size_t offset = 0;
  for (int l = 0; l <= table.depth; ++l) {
    in.level_offset.push_back(offset);
    const std::size_t count = table.words(l);
    for (std::size_t i = 0; i < count; ++i) {
      in.log_phi.push_back(
          l == 0 ? 0.0
                 : log_phi_from_logs(table.log_sv[static_cast<std::size_t>(l)].data() + i * static_cast<std::size_t>(table.dim),
                                     table.dim, s));
    }
    offset += count;
  }
  in.log_mass = table.log_mass[static_cast<std::size_t>(table.depth)];
  return in;
}

}  // namespace

double exact_truncated_multienergy(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                   int depth, std::uint64_t budget) {
  check_energy_args(ifs, model, s, n, q, depth);
  const double log_tuples = (n + 1) * depth * std::log(static_cast<double>(ifs.size()));
  if (n > 7 || log_tuples > std::log(static_cast<double>(budget))) {
    throw ResourceLimit("exact multienergy needs m^((n+1)D) = " + std::to_string(std::exp(log_tuples)) +
                        " tuples, above the budget " + std::to_string(budget));
  }
  const WordTable table = kernels::omp::build_word_table(ifs, model, depth);
  const auto in = energy_input(table, s, n);
  const auto inner = kernels::omp::truncated_inner_sums(in);
  const double power = (q - 1.0) / n;
  double total = 0.0;
  for (std::size_t j = 0; j < inner.size(); ++j) total += std::exp(in.log_mass[j]) * std::pow(inner[j], power);
  return total;
}

namespace {

using ClassKey = std::tuple<int, std::uint64_t, std::string>;  // root level, root index, form

struct ClassAccumulator {
  JoinClass cls;
  double lhs = 0.0;
};

// Walk n-tuples of depth-D words inside C_root and hand each tuple's join
// set, weight and kernel to `visit`.
template <class Visit>
void walk_tuples(const WordTable& table, const Word& root, int n, int depth, double s, Visit&& visit) {
  const int m = table.m;
  const std::uint64_t span = detail::ipow(m, depth - static_cast<int>(root.size()));
  const std::uint64_t base = root.index(m) * span;
  std::vector<std::uint64_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<Word> rays(static_cast<std::size_t>(n));
  const auto& log_mass = table.log_mass[static_cast<std::size_t>(depth)];
  for (;;) {
    double log_w = 0.0;
    for (int t = 0; t < n; ++t) {
      const std::uint64_t w = base + idx[static_cast<std::size_t>(t)];
      rays[static_cast<std::size_t>(t)] = Word::from_index(w, depth, m);
      log_w += log_mass[w];
    }
    JoinSet js = join_set(rays, JoinResolution::collapse);
    js.root = root;
    double log_k = 0.0;
    for (const auto& v : js.vertices) {
      if (v.vertex.empty()) continue;
      const int l = static_cast<int>(v.vertex.size());
      const double* sv =
          table.log_sv[static_cast<std::size_t>(l)].data() + v.vertex.index(m) * static_cast<std::uint64_t>(table.dim);
      log_k += v.multiplicity * log_phi_from_logs(sv, table.dim, s);
    }
    visit(js, std::exp(log_w - log_k));
    int t = 0;
    while (t < n && ++idx[static_cast<std::size_t>(t)] == span) idx[static_cast<std::size_t>(t++)] = 0;
    if (t == n) break;
  }
}

double class_bound_rhs(const WordTable& table, const Word& root, const std::vector<int>& levels, int n, double s,
                  double q) {
  const int m = table.m;
  const int k = static_cast<int>(root.size());
  double log_rhs = 0.0;
  if (k > 0) log_rhs += (q - n) / (q - 1.0) * table.log_mass[static_cast<std::size_t>(k)][root.index(m)];
  for (int l : levels) {
    detail::LogSum acc;
    const std::uint64_t span = detail::ipow(m, l - k);
    const std::uint64_t base = root.index(m) * span;
    for (std::uint64_t u = base; u < base + span; ++u) {
      const double lphi =
          l == 0 ? 0.0
                 : log_phi_from_logs(table.log_sv[static_cast<std::size_t>(l)].data() + u * static_cast<std::uint64_t>(table.dim),
                                     table.dim, s);
      acc.add((1.0 - q) * lphi + q * table.log_mass[static_cast<std::size_t>(l)][u]);
    }
    log_rhs += acc.value() / (q - 1.0);
  }
  return std::exp(log_rhs);
}

void check_class_bound_args(const AffineIFS& ifs, const MeasureModel& model, double s, double q) {
  if (ifs.size() != model.size()) throw InvalidInput("measure and maps differ in alphabet size");
  if (!(s > 0.0)) throw InvalidInput("s must be positive");
  if (!(q > 1.0)) throw InvalidInput("q must exceed 1");
}

}  // namespace

JoinClassCheck check_join_class_bound(const AffineIFS& ifs, const MeasureModel& model, double s, double q,
                               const JoinClass& join_class, int depth) {
  check_class_bound_args(ifs, model, s, q);
  const int n = join_class.spread;
  if (n < 2) throw InvalidInput("join class spread must be at least 2");
  if (n > q) throw InvalidInput("join class spread " + std::to_string(n) + " exceeds q; the bound needs q >= n");
  const int max_level = join_class.levels.empty() ? 0 : join_class.levels.back();
  if (depth <= max_level) throw InvalidInput("depth must exceed the deepest level of the class");
  if (static_cast<int>(join_class.root.size()) > max_level) throw InvalidInput("class root below its levels");
  const double tuples = std::pow(static_cast<double>(ifs.size()), n * (depth - static_cast<int>(join_class.root.size())));
  if (tuples > 5e7) throw ResourceLimit("join-class enumeration too large");
  const WordTable table = kernels::omp::build_word_table(ifs, model, depth);
  JoinClassCheck out;
  out.join_class = join_class;
  walk_tuples(table, join_class.root, n, depth, s, [&](const JoinSet& js, double w) {
    if (canonical_form(js) == join_class.canonical_form) out.lhs += w;
  });
  out.rhs = class_bound_rhs(table, join_class.root, join_class.levels, n, s, q);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-9);
  return out;
}

std::vector<JoinClassCheck> check_join_class_bounds(const AffineIFS& ifs, const MeasureModel& model, double s, double q,
                                          int max_spread, int max_level) {
  check_class_bound_args(ifs, model, s, q);
  if (max_spread < 2) throw InvalidInput("max_spread must be at least 2");
  if (max_level < 0) throw InvalidInput("max_level must be nonnegative");
  const int depth = max_level + 1;
  const int m = ifs.size();
  if (std::pow(static_cast<double>(m), max_spread * depth) > 5e7) throw ResourceLimit("join-class enumeration too large");
  const WordTable table = kernels::omp::build_word_table(ifs, model, depth);
  std::vector<JoinClassCheck> out;
  for (int n = 2; n <= max_spread && n <= q; ++n) {
    for (int k = 0; k <= max_level; ++k) {
      for (std::uint64_t r = 0; r < detail::ipow(m, k); ++r) {
        const Word root = Word::from_index(r, k, m);
        std::map<std::string, ClassAccumulator> classes;
        walk_tuples(table, root, n, depth, s, [&](const JoinSet& js, double w) {
          for (const auto& v : js.vertices)
            if (static_cast<int>(v.vertex.size()) > max_level) return;
          auto& acc = classes[canonical_form(js)];
          if (acc.cls.spread == 1) acc.cls = canonical_join_class(js);
          acc.lhs += w;
        });
        for (auto& [form, acc] : classes) {
          JoinClassCheck c;
          c.join_class = acc.cls;
          c.lhs = acc.lhs;
          c.rhs = class_bound_rhs(table, root, acc.cls.levels, n, s, q);
          c.holds = c.lhs <= c.rhs * (1.0 + 1e-9);
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

DecayCheck check_decay_criterion(const AffineIFS& ifs, const MeasureModel& model, double s, double q, int k_max) {
  if (k_max < 2) throw InvalidInput("decay check needs k_max >= 2");
  DecayCheck d;
  d.log_sums = log_moment_sums(ifs, model, s, q, k_max);
  double sx = 0, sy = 0;
  for (int k = 1; k <= k_max; ++k) {
    sx += k;
    sy += d.log_sums[static_cast<std::size_t>(k)];
  }
  const double mx = sx / k_max, my = sy / k_max;
  double sxx = 0, sxy = 0;
  for (int k = 1; k <= k_max; ++k) {
    sxx += (k - mx) * (k - mx);
    sxy += (k - mx) * (d.log_sums[static_cast<std::size_t>(k)] - my);
  }
  d.slope = sxy / sxx;
  d.lambda_fit = std::exp(d.slope);
  d.geometric = d.slope < -1e-3;
  d.growing = d.slope > 1e-3;
  return d;
}

TruncationTrend truncation_trend(const AffineIFS& ifs, const MeasureModel& model, double s, int n, double q,
                                 int d_max) {
  if (d_max < 4) throw InvalidInput("truncation trend needs d_max >= 4");
  TruncationTrend t;
  for (int d = 1; d <= d_max; ++d) t.values.push_back(exact_truncated_multienergy(ifs, model, s, n, q, d));
  for (std::size_t i = 2; i < t.values.size(); ++i) {
    const double prev = t.values[i - 1] - t.values[i - 2];
    const double cur = t.values[i] - t.values[i - 1];
    t.difference_ratios.push_back(cur / prev);
  }
  const std::size_t take = std::min<std::size_t>(3, t.difference_ratios.size());
  double log_acc = 0.0;
  for (std::size_t i = t.difference_ratios.size() - take; i < t.difference_ratios.size(); ++i) {
    log_acc += std::log(t.difference_ratios[i]);
  }
  t.ratio = std::exp(log_acc / static_cast<double>(take));
  t.cauchy = t.ratio < 1.0;
  return t;
}

TransversalityResult simulate_transversality(const AffineIFS& ifs, const Word& u, const Word& v, double s,
                                             std::size_t trials, std::uint64_t seed) {
  if (!(s > 0.0) || !(s < ifs.dim())) throw InvalidInput("s must lie in (0, N)");
  if (s == std::floor(s)) throw InvalidInput("s must be non-integer for the transversality bound");
  if (u == v) throw InvalidInput("rays u and v must differ");
  if (trials < 2) throw InvalidInput("need at least two trials");
  const std::size_t depth = std::min(u.size(), v.size());
  if (u.prefix(depth) == v.prefix(depth)) throw InvalidInput("rays must differ within their common length");
  const Word w = wedge(u, v);
  TransversalityResult r;
  r.bound = std::exp(-log_phi_s(singular_values(compose(ifs, w)), s));
  std::vector<double> vals(trials);
  const int d = ifs.dim();
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
    const DisplacementField field(derive_seed(seed, static_cast<std::uint64_t>(t)), d, ifs.region_radius());
    auto disp = [&](DisplacementField::Key k, double* out) { field.displacement(k, out); };
    double a[kMaxDim], b[kMaxDim];
    project_into(ifs, u, static_cast<int>(depth), disp, a);
    project_into(ifs, v, static_cast<int>(depth), disp, b);
    double dist2 = 0.0;
    for (int c = 0; c < d; ++c) dist2 += (a[c] - b[c]) * (a[c] - b[c]);
    vals[static_cast<std::size_t>(t)] = std::pow(dist2, -0.5 * s);
  }
  double mean = 0.0;
  for (double x : vals) mean += x;
  mean /= static_cast<double>(trials);
  double var = 0.0;
  for (double x : vals) var += (x - mean) * (x - mean);
  var /= static_cast<double>(trials - 1);
  r.empirical_mean = mean;
  r.stderr_ = std::sqrt(var / static_cast<double>(trials));
  r.ratio = mean / r.bound;
  return r;
}

}  // namespace qdim
