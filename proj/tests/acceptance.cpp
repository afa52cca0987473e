// Acceptance run: one PASS/FAIL line per criterion, with the measured values
// and wall time. Exit status is nonzero when any criterion fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qdim/codespace.hpp"
#include "qdim/commands.hpp"
#include "qdim/config.hpp"
#include "qdim/dimsolver.hpp"
#include "qdim/estimator.hpp"
#include "qdim/multienergy.hpp"
#include "qdim/rng.hpp"
#include "qdim/sampler.hpp"

using namespace qdim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += " [failed: " + what + "]";
    }
  }
  void note(const std::string& s) { detail += " " + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string(" [exception: ") + e.what() + "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < limit_s, "runtime " + fmt("%.1f", secs) + " s over " + fmt("%.0f", limit_s) + " s");
  if (!o.pass) ++failures;
  std::printf("%s %d %s:%s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

Matrix random_matrix(std::mt19937_64& rng, double max_norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = u(rng);
  const double a = singular_values(m)[0];
  std::uniform_real_distribution<double> scale(0.2, max_norm);
  const double f = scale(rng) / a;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) *= f;
  return m;
}

std::vector<Word> words_of_length(int m, int k) {
  std::vector<Word> out;
  std::uint64_t total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<std::uint64_t>(m);
  for (std::uint64_t i = 0; i < total; ++i) out.push_back(Word::from_index(i, k, m));
  return out;
}

std::vector<Word> words_up_to_length(int m, int k) {
  std::vector<Word> out;
  for (int l = 1; l <= k; ++l) {
    auto w = words_of_length(m, l);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

void subsets(const std::vector<Word>& pool, int k, const std::function<void(const std::vector<Word>&)>& f) {
  std::vector<Word> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (static_cast<int>(pick.size()) == k) {
      f(pick);
      return;
    }
    for (std::size_t i = from; i < pool.size(); ++i) {
      pick.push_back(pool[i]);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
}

void multisets(int size, int max_level, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int lo) {
    if (static_cast<int>(cur.size()) == size) {
      f(cur);
      return;
    }
    for (int l = lo; l <= max_level; ++l) {
      cur.push_back(l);
      rec(l);
      cur.pop_back();
    }
  };
  rec(0);
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

AffineIFS identical(int copies) {
  return AffineIFS(std::vector<LinearContraction>(static_cast<std::size_t>(copies),
                                                  LinearContraction(Matrix::diagonal({0.5, 0.3}))));
}

AffineIFS three_maps() {
  return AffineIFS{Matrix::diagonal({0.5, 0.4}), Matrix::diagonal({0.45, 0.3}), Matrix::diagonal({0.4, 0.35})};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome closed_form() {
  Outcome o;
  const MomentTable table(identical(2), MeasureModel::bernoulli({0.7, 0.3}));
  for (double q : {2.0, 3.0}) {
    const double want = std::log(std::pow(0.7, q) + std::pow(0.3, q)) / ((q - 1) * std::log(0.5));
    const double got = d_q_minus(table, q, 1e-6).d_q;
    o.note("d_" + fmt("%g", q) + "=" + fmt("%.6f", got) + " (closed form " + fmt("%.6f", want) + ")");
    o.require(std::abs(got - want) <= 1e-3, "d_q off by more than 1e-3");
  }
  return o;
}

Outcome uniform_weights() {
  Outcome o;
  const MomentTable table(identical(2), MeasureModel::bernoulli({0.5, 0.5}));
  double worst = 0;
  for (double q : {1.5, 2.0, 3.0, 5.0}) worst = std::max(worst, std::abs(d_q_minus(table, q, 1e-6).d_q - 1.0));
  o.note("max |d_q - 1| = " + fmt("%.2e", worst));
  o.require(worst <= 1e-3, "d_q not constant 1");
  return o;
}

Outcome phase_kink() {
  Outcome o;
  const std::vector<double> p{0.6, 0.2, 0.2};
  const MomentTable table(identical(3), MeasureModel::bernoulli(p));
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(1.5 + 0.05 * i);
  const auto scan = phase_transition_scan(table, grid, 1e-6);
  // Crossing of 1: sum p^q = 0.5^{q-1}.
  auto g = [&](double q) {
    double s = 0;
    for (double x : p) s += std::pow(x, q);
    return std::log(s) - (q - 1) * std::log(0.5);
  };
  double lo = 1.5, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  o.note("analytic crossing q=" + fmt("%.4f", lo) + ", flagged:");
  for (auto i : scan.kinks) o.note(fmt("%.2f", scan.q[i]));
  o.require(scan.kinks.size() == 1, "expected exactly one flagged kink");
  o.require(!scan.kinks.empty() && std::abs(scan.q[scan.kinks[0]] - lo) <= 0.05 + 1e-12, "kink not within one step");
  return o;
}

void end_to_end_seed(Outcome& o, double d2, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ifs = three_maps();
  const auto mu = MeasureModel::bernoulli({0.5, 0.3, 0.2});
  const int depth = std::max(40, depth_for_bound(ifs, 1.0, 1e-9));
  const auto cloud = sample_cloud(ifs, mu, derive_seed(seed, "cloud"), 1'000'000, depth);
  LadderOptions opts;
  opts.rho = 0.5;
  opts.rungs = 12;
  const auto est = estimate_dimension(mesh_ladder(cloud, 2.0, opts), 2);
  const int used = est.l_max - est.l_min + 1;
  const double disc = est.value - std::min(d2, 2.0);
  o.note("seed " + fmt("%.0f", static_cast<double>(seed)) + ": K=" + fmt("%.0f", depth) + " D_2=" +
         fmt("%.4f", est.value) + " d_2=" + fmt("%.4f", d2) + " discrepancy " + fmt("%+.4f", disc) + " over " +
         fmt("%.0f", used) + " rungs");
  o.require(used >= 8, "fewer than 8 usable rungs");
  o.require(std::abs(disc) <= 0.15, "discrepancy above 0.15");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.note("in " + fmt("%.1f", secs) + " s;");
  o.require(secs < 300, "seed over 5 min");
}

Outcome end_to_end() {
  Outcome o;
  const double d2 = d_q_minus(MomentTable(three_maps(), MeasureModel::bernoulli({0.5, 0.3, 0.2})), 2.0, 1e-5).d_q;
  for (std::uint64_t seed : {1, 2, 3}) end_to_end_seed(o, d2, seed);
  return o;
}

Outcome property_suites() {
  Outcome o;
  std::mt19937_64 rng(2024);

  // Submultiplicativity of phi^s.
  {
    bool ok = true;
    for (int pair = 0; pair < 1000; ++pair) {
      const Matrix t = random_matrix(rng, 0.95), u = random_matrix(rng, 0.95);
      for (int i = 1; i <= 10; ++i) {
        const double s = 0.4 * i;
        ok &= phi_s(t * u, s) <= phi_s(t, s) * phi_s(u, s) * (1 + 1e-9);
      }
    }
    o.require(ok, "submultiplicativity");
  }

  // Sandwich a_-^{hk} phi^s <= phi^{s+h} <= a_+^{hk} phi^s over |w| <= 6.
  {
    bool ok = true;
    for (int trial = 0; trial < 3; ++trial) {
      const AffineIFS ifs{random_matrix(rng, 0.8), random_matrix(rng, 0.8)};
      for (const auto& w : words_up_to_length(2, 6)) {
        const auto sv = singular_values(compose(ifs, w));
        const double k = static_cast<double>(w.size());
        for (double s : {0.3, 0.9, 1.5, 2.2})
          for (double h : {0.1, 0.6, 1.3}) {
            const double lhs = std::pow(ifs.a_minus(), h * k) * phi_s(sv, s);
            const double rhs = std::pow(ifs.a_plus(), h * k) * phi_s(sv, s);
            const double mid = phi_s(sv, s + h);
            ok &= lhs <= mid * (1 + 1e-9) && mid <= rhs * (1 + 1e-9);
          }
      }
    }
    o.require(ok, "phi sandwich");
  }

  // Cut-set stopping: exactly one prefix of each ray lies in the cut.
  {
    bool ok = true;
    int configs = 0;
    for (int trial = 0; trial < 3; ++trial) {
      const AffineIFS ifs{random_matrix(rng, 0.8), random_matrix(rng, 0.8), random_matrix(rng, 0.8)};
      for (double s : {0.5, 1.5})
        for (double r : {0.1, 0.02}) {
          const auto cut = cut_set(ifs, s, r);
          const std::set<Word> members(cut.begin(), cut.end());
          std::uniform_int_distribution<int> sym(0, 2);
          for (int k = 0; k < 1000; ++k) {
            Word ray;
            for (int i = 0; i < 120; ++i) ray.push_back(static_cast<Symbol>(sym(rng)));
            int hits = 0;
            for (std::size_t len = 1; len <= ray.size(); ++len) hits += static_cast<int>(members.count(ray.prefix(len)));
            ok &= hits == 1;
          }
          ++configs;
        }
    }
    o.require(ok, "cut-set stopping over " + fmt("%.0f", configs) + " configurations");
  }

  // Bernoulli supermultiplicativity of Phi_k.
  {
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
      const AffineIFS ifs{random_matrix(rng, 0.8), random_matrix(rng, 0.8)};
      std::uniform_real_distribution<double> u(0.1, 0.9);
      const double p = u(rng);
      const auto mu = MeasureModel::bernoulli({p, 1 - p});
      for (double s : {0.4, 1.1, 1.8})
        for (double q : {1.5, 2.0, 3.0}) {
          const auto logs = log_moment_sums(ifs, mu, s, q, 10);
          for (int k = 1; k < 10; ++k)
            for (int l = 1; k + l <= 10; ++l)
              ok &= logs[static_cast<std::size_t>(k + l)] >=
                    logs[static_cast<std::size_t>(k)] + logs[static_cast<std::size_t>(l)] - 1e-9;
        }
    }
    o.require(ok, "Phi_k supermultiplicativity");
  }

  // Gibbs sandwich and quasi-Bernoulli bound on Markov models, depth <= 6.
  {
    bool gibbs_ok = true, qb_ok = true;
    for (int m : {2, 3}) {
      std::normal_distribution<double> g(0.0, 0.6);
      std::vector<std::vector<double>> f(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
      for (auto& row : f)
        for (auto& x : row) x = g(rng);
      const auto mu = MeasureModel::markov_gibbs(f);
      const double c = mu.gibbs_constant();
      const double a3 = std::pow(mu.quasi_bernoulli_constant(), 3);
      const auto all = words_up_to_length(m, 6);
      for (const auto& w : all) {
        const double k = static_cast<double>(w.size());
        const double ratio = mu.cylinder_mass(w) / std::exp(-k * mu.pressure() + mu.ergodic_sum(w));
        gibbs_ok &= ratio >= c * (1 - 1e-9) && ratio <= (1 + 1e-9) / c;
        if (w.size() > 5) continue;
        for (const auto& v : all) {
          if (w.size() + v.size() > 6) continue;
          Word wv = w;
          for (std::size_t i = 0; i < v.size(); ++i) wv.push_back(v[i]);
          const double r = mu.cylinder_mass(wv) / (mu.cylinder_mass(w) * mu.cylinder_mass(v));
          qb_ok &= r >= a3 * (1 - 1e-9) && r <= (1 + 1e-9) / a3;
        }
      }
    }
    o.require(gibbs_ok, "Gibbs sandwich");
    o.require(qb_ok, "quasi-Bernoulli bound");
  }

  // Join-set closure and total multiplicity n - 1, n <= 5, depth 4, m = 2.
  {
    bool ok = true;
    std::size_t sets = 0;
    const auto rays = words_of_length(2, 4);
    for (int n = 2; n <= 5; ++n) {
      subsets(rays, n, [&](const std::vector<Word>& pick) {
        const auto j = join_set(pick);
        int total = 0;
        std::set<Word> vertices;
        for (const auto& v : j.vertices) {
          total += v.multiplicity;
          vertices.insert(v.vertex);
        }
        ok &= total == n - 1;
        for (std::size_t a = 0; a < pick.size(); ++a)
          for (std::size_t b = a + 1; b < pick.size(); ++b) ok &= vertices.count(wedge(pick[a], pick[b])) == 1;
        ++sets;
      });
    }
    o.require(ok, "join-set closure / multiplicity over " + fmt("%.0f", static_cast<double>(sets)) + " ray sets");
  }

  // Count bound over every level multiset of size n <= 5 with levels <= 3.
  {
    int checked = 0, violations = 0, rooted_violations = 0;
    std::string first;
    for (int n = 1; n <= 5; ++n) {
      multisets(n, 3, [&](const std::vector<int>& levels) {
        const double bound = factorial(n - 1);
        const auto count = count_join_configurations(levels);
        const auto rooted = count_rooted_join_classes(levels);
        ++checked;
        if (count > bound) {
          if (violations++ == 0) {
            first = "N(";
            for (std::size_t i = 0; i < levels.size(); ++i) first += (i ? "," : "") + std::to_string(levels[i]);
            first += ")=" + std::to_string(count) + " > " + fmt("%.0f", bound);
          }
        }
        rooted_violations += rooted > bound;
      });
    }
    o.note("count bound: " + fmt("%.0f", violations) + " of " + fmt("%.0f", checked) + " multisets exceed (n-1)!" +
           (violations ? " e.g. " + first : "") + "; rooted-class count N_0 exceeds it on " +
           fmt("%.0f", rooted_violations));
    o.require(violations == 0, "N <= (n-1)!");
  }
  return o;
}

Outcome energy_numerics() {
  Outcome o;
  const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::from_rows({{0.4, 0.1}, {0.0, 0.35}})};
  const auto mu = MeasureModel::markov_gibbs({{0.2, -0.3}, {0.1, 0.0}});

  // Join-class bounds, spread <= 4, three (s, q) settings.
  {
    std::size_t classes = 0, held = 0;
    for (auto [s, q] : std::vector<std::pair<double, double>>{{0.3, 4.0}, {0.7, 4.5}, {1.3, 5.0}}) {
      for (const auto& c : check_join_class_bounds(ifs, mu, s, q, 4, 3)) {
        ++classes;
        held += c.holds;
      }
    }
    o.note("join-class bounds " + fmt("%.0f", static_cast<double>(held)) + "/" + fmt("%.0f", static_cast<double>(classes)));
    o.require(classes > 0 && held == classes, "join-class bound");
  }

  // Monte Carlo against the exact truncated sum; q = n + 1 keeps the inner
  // average linear so the estimator is unbiased.
  {
    int cells = 0, agree = 0;
    double worst = 0;
    for (int n = 1; n <= 3; ++n) {
      for (int depth = 1; depth <= 6; ++depth) {
        const double q = n + 1.0;
        const double s = 0.6;
        const double exact = exact_truncated_multienergy(ifs, mu, s, n, q, depth);
        MultiEnergyOptions opts;
        opts.mode = JoinResolution::collapse;
        opts.seed = derive_seed(1, static_cast<std::uint64_t>(10 * n + depth));
        opts.inner = 16;
        const auto mc = mc_multienergy(ifs, mu, s, n, q, 8192, depth, opts);
        const double z = std::abs(mc.value - exact) / mc.stderr_;
        worst = std::max(worst, z);
        ++cells;
        agree += z <= 3.0;
      }
    }
    o.note("mc vs exact " + fmt("%.0f", agree) + "/" + fmt("%.0f", cells) + " cells, max z " + fmt("%.2f", worst));
    o.require(agree == cells, "mc vs exact within 3 stderr");
  }

  // Decay flag below d_q, growth above, on two systems.
  {
    bool ok = true;
    int points = 0;
    const MeasureModel bern = MeasureModel::bernoulli({0.7, 0.3});
    const AffineIFS same = identical(2);
    const double d_same = d_q_minus(MomentTable(same, bern), 2.0, 1e-6).d_q;
    const double d_mixed = d_q_minus(MomentTable(ifs, mu), 2.0, 1e-6).d_q;
    for (auto [sys, model, d] : std::vector<std::tuple<const AffineIFS*, const MeasureModel*, double>>{
             {&same, &bern, d_same}, {&ifs, &mu, d_mixed}}) {
      for (double off : {-0.4, -0.25, -0.1, 0.1, 0.25, 0.4}) {
        const double s = d + off;
        const auto dc = check_decay_criterion(*sys, *model, s, 2.0, 12);
        ok &= off < 0 ? (dc.geometric && !dc.growing) : (dc.growing && !dc.geometric);
        ++points;
      }
    }
    o.note("decay dichotomy on " + fmt("%.0f", points) + " s values around d_2=" + fmt("%.4f", d_same) + ", " +
           fmt("%.4f", d_mixed));
    o.require(ok, "decay dichotomy");
  }
  return o;
}

Outcome reproducibility() {
  Outcome o;
  auto cfg = parse_config(
      "seed = 99\n[ifs]\ndim = 2\nmap1 = 0.5 0 0 0.4\nmap2 = 0.45 0 0 0.3\nmap3 = 0.4 0 0 0.35\n"
      "[measure]\nkind = bernoulli\nprobs = 0.5 0.3 0.2\n[analysis]\nsamples = 200000\ndepth = 40\n");
  const auto root = fs::temp_directory_path() / "qdim_acceptance_repro";
  fs::remove_all(root);
  std::vector<std::string> bytes;
  for (int threads : {1, 1, 8, 8}) {
    omp_set_num_threads(threads);
    cfg.output = (root / std::to_string(bytes.size())).string();
    cmd_sample(cfg);
    bytes.push_back(slurp(fs::path(cfg.output) / "cloud.txt"));
  }
  fs::remove_all(root);
  o.note("4 runs (threads 1,1,8,8), " + fmt("%.0f", static_cast<double>(bytes[0].size())) + " bytes each");
  o.require(!bytes[0].empty(), "empty cloud file");
  for (std::size_t i = 1; i < bytes.size(); ++i) o.require(bytes[i] == bytes[0], "run " + std::to_string(i) + " differs");
  return o;
}

}  // namespace

int main() {
  run(1, "closed-form d_2, d_3", 10, closed_form);
  run(2, "uniform weights give d_q = 1", 30, uniform_weights);
  run(3, "phase-transition kink", 120, phase_kink);
  run(4, "end-to-end D_2 vs min(d_2, N), 3 seeds", 900, end_to_end);
  run(5, "property suites", 300, property_suites);
  run(6, "multienergy numerics", 600, energy_numerics);
  run(7, "sample reproducibility", 300, reproducibility);
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
