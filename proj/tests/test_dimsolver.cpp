#include <cmath>
#include <random>

#include "doctest.h"
#include "qdim/dimsolver.hpp"
#include "qdim/error.hpp"
#include "support.hpp"

using namespace qdim;

namespace {

// d_q for identical maps diag(a1, a2), a1 > a2, Bernoulli p, solved by hand:
// phi^s(T)^{q-1} = sum p^q with phi^s = a1^s below 1 and a1 a2^{s-1} above.
double identical_diag_oracle(double a1, double a2, const std::vector<double>& p, double q) {
  double sum = 0;
  for (double x : p) sum += std::pow(x, q);
  const double log_r = std::log(sum) / (q - 1.0);
  const double s = log_r / std::log(a1);
  if (s <= 1.0) return s;
  return 1.0 + (log_r - std::log(a1)) / std::log(a2);
}

// Phi_k by direct enumeration of all words.
double brute_moment_sum(const AffineIFS& ifs, const MeasureModel& mu, double s, double q, int k) {
  std::uint64_t total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<std::uint64_t>(ifs.size());
  double acc = 0;
  for (std::uint64_t i = 0; i < total; ++i) {
    const Word w = Word::from_index(i, k, ifs.size());
    acc += std::pow(phi_s(compose(ifs, w), s), 1.0 - q) * std::pow(mu.cylinder_mass(w), q);
  }
  return acc;
}

}  // namespace

TEST_SUITE("dimsolver") {
  TEST_CASE("closed-form system") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    const auto mu = MeasureModel::bernoulli({0.7, 0.3});
    const MomentTable table(ifs, mu);
    for (double q : {2.0, 3.0}) {
      const auto r = d_q_minus(table, q);
      CHECK(r.d_q == doctest::Approx(identical_diag_oracle(0.5, 0.3, {0.7, 0.3}, q)).epsilon(1e-3));
      CHECK(r.rate_lo < 1.0);
      CHECK(r.rate_hi > 1.0);
      CHECK(r.s_lo <= r.d_q);
      CHECK(r.d_q <= r.s_hi);
      CHECK(closed_form_d_q(Matrix::diagonal({0.5, 0.3}), {0.7, 0.3}, q) ==
            doctest::Approx(identical_diag_oracle(0.5, 0.3, {0.7, 0.3}, q)).epsilon(1e-12));
    }
    CHECK(d_q_minus(table, 2.0).d_q == doctest::Approx(std::log(0.58) / std::log(0.5)).epsilon(1e-4));
  }

  TEST_CASE("uniform weights give a constant d_q") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    const MomentTable table(ifs, MeasureModel::bernoulli({0.5, 0.5}));
    for (double q : {1.5, 2.0, 3.0, 5.0}) CHECK(d_q_minus(table, q).d_q == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(affinity_dimension(table) == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("above one the second singular value takes over") {
    const std::vector<double> p{0.4, 0.3, 0.3};
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    SolverOptions opts;
    opts.table_budget = 1 << 16;
    const MomentTable table(ifs, MeasureModel::bernoulli(p), opts);
    const double want = identical_diag_oracle(0.5, 0.3, p, 2.0);
    REQUIRE(want > 1.0);
    CHECK(d_q_minus(table, 2.0).d_q == doctest::Approx(want).epsilon(1e-3));
  }

  TEST_CASE("moment sums match enumeration") {
    std::mt19937_64 rng(31);
    const AffineIFS ifs{testing::random_contraction(rng, 2), testing::random_contraction(rng, 2),
                        testing::random_contraction(rng, 2)};
    const auto bern = MeasureModel::bernoulli(testing::random_probs(rng, 3));
    const auto gibbs = MeasureModel::markov_gibbs(testing::random_potential(rng, 3));
    for (const auto* mu : {&bern, &gibbs}) {
      for (double s : {0.5, 1.5}) {
        const auto logs = log_moment_sums(ifs, *mu, s, 2.5, 5);
        for (int k = 1; k <= 5; ++k) {
          CHECK(std::exp(logs[static_cast<std::size_t>(k)]) ==
                doctest::Approx(brute_moment_sum(ifs, *mu, s, 2.5, k)).epsilon(1e-10));
        }
        CHECK(moment_sum(ifs, *mu, s, 2.5, 4) == doctest::Approx(brute_moment_sum(ifs, *mu, s, 2.5, 4)).epsilon(1e-10));
      }
    }
    CHECK_THROWS_AS(moment_sum(ifs, bern, 1.0, 2.0, 20, 1000), ResourceLimit);
  }

  TEST_CASE("bernoulli moment sums are supermultiplicative") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const AffineIFS ifs{testing::random_contraction(rng, 2), testing::random_contraction(rng, 2)};
      const auto mu = MeasureModel::bernoulli(testing::random_probs(rng, 2));
      for (double s : {0.4, 1.2, 1.9}) {
        const auto logs = log_moment_sums(ifs, mu, s, 2.0, 10);
        for (int k = 1; k < 10; ++k)
          for (int l = 1; k + l <= 10; ++l)
            CHECK(logs[static_cast<std::size_t>(k + l)] >=
                  logs[static_cast<std::size_t>(k)] + logs[static_cast<std::size_t>(l)] - 1e-9);
      }
    }
  }

  TEST_CASE("growth rate increases in s") {
    const AffineIFS ifs{Matrix::from_rows({{0.5, 0.2}, {0.0, 0.3}}), Matrix::diagonal({0.4, 0.35})};
    const MomentTable table(ifs, MeasureModel::markov_gibbs({{0.2, -0.1}, {0.0, 0.3}}));
    double prev = 0;
    for (double s = 0.2; s < 2.0; s += 0.2) {
      const auto g = table.growth_rate(s, 2.0);
      CHECK(g.lower_bound >= g.estimate * std::pow(table.supermultiplicative_constant(2.0), 1.0 / g.k_max) * (1 - 1e-12));
      CHECK(g.lower_bound > prev);
      prev = g.lower_bound;
    }
    const auto free_g = growth_rate(ifs, MeasureModel::markov_gibbs({{0.2, -0.1}, {0.0, 0.3}}), 1.0, 2.0, 8);
    CHECK(free_g.k_max == 8);
  }

  TEST_CASE("cut-set sums stay level at d_q") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    const auto mu = MeasureModel::bernoulli({0.7, 0.3});
    const double d = identical_diag_oracle(0.5, 0.3, {0.7, 0.3}, 2.0);
    const auto at = d_q_plus_cutset(ifs, mu, 2.0, d, 0.5, 14);
    const auto below = d_q_plus_cutset(ifs, mu, 2.0, d - 0.1, 0.5, 14);
    const auto above = d_q_plus_cutset(ifs, mu, 2.0, d + 0.1, 0.5, 14);
    CHECK(std::abs(std::log(at.back() / at.front())) < 1e-9);
    CHECK(below.back() < below.front());
    CHECK(above.back() > above.front());
  }

  TEST_CASE("affinity dimension of a similarity system") {
    // Two similarities of ratio 0.4 in the plane: 2 * 0.4^s = 1.
    const AffineIFS ifs{Matrix::scaled_rotation(0.4, 0.3), Matrix::scaled_rotation(0.4, 1.2)};
    CHECK(affinity_dimension(ifs) == doctest::Approx(std::log(2.0) / -std::log(0.4)).epsilon(1e-3));
  }

  TEST_CASE("phase scan flags the crossing of 1") {
    const std::vector<double> p{0.6, 0.2, 0.2};
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    SolverOptions opts;
    opts.table_budget = 1 << 12;
    const MomentTable table(ifs, MeasureModel::bernoulli(p), opts);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(1.5 + 0.125 * i);
    const auto scan = phase_transition_scan(table, grid, 1e-7);
    // The oracle crossing: sum p^q = 0.5^{q-1}.
    double lo = 1.5, hi = 4.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (identical_diag_oracle(0.5, 0.3, p, mid) > 1.0 ? lo : hi) = mid;
    }
    REQUIRE(scan.kinks.size() == 1);
    CHECK(std::abs(scan.q[scan.kinks[0]] - lo) <= 0.125);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(scan.d_q[i] == doctest::Approx(identical_diag_oracle(0.5, 0.3, p, grid[i])).epsilon(1e-5));
    CHECK_THROWS_AS(phase_transition_scan(table, {2.0, 1.8, 3.0}), InvalidInput);
  }

  TEST_CASE("invalid arguments") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::diagonal({0.5, 0.3})};
    const MomentTable table(ifs, MeasureModel::bernoulli({0.5, 0.5}));
    CHECK_THROWS_AS(d_q_minus(table, 1.0), InvalidInput);
    CHECK_THROWS_AS(table.growth_rate(-1.0, 2.0), InvalidInput);
    CHECK_THROWS_AS(MomentTable(ifs, MeasureModel::bernoulli({0.2, 0.3, 0.5})), InvalidInput);
  }
}
