#include <omp.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "qdim/codespace.hpp"
#include "qdim/kernels.hpp"
#include "qdim/sampler.hpp"
#include "support.hpp"

using namespace qdim;

namespace {

AffineIFS three_maps() {
  return AffineIFS{Matrix::from_rows({{0.5, 0.1}, {0.0, 0.4}}), Matrix::diagonal({0.45, 0.3}),
                   Matrix::from_rows({{0.4, 0.0}, {-0.1, 0.35}})};
}

MeasureModel markov3() { return MeasureModel::markov_gibbs({{0.1, -0.4, 0.3}, {0.0, 0.2, -0.1}, {0.5, 0.0, 0.1}}); }

TruncatedEnergyInput energy_input(const WordTable& table, double s, int n) {
  TruncatedEnergyInput in;
  in.m = table.m;
  in.depth = table.depth;
  in.inner = n;
  std::size_t offset = 0;
  for (int l = 0; l <= table.depth; ++l) {
    in.level_offset.push_back(offset);
    for (std::size_t i = 0; i < table.words(l); ++i) {
      in.log_phi.push_back(l == 0 ? 0.0
                                  : log_phi_from_logs(table.log_sv[static_cast<std::size_t>(l)].data() +
                                                          i * static_cast<std::size_t>(table.dim),
                                                      table.dim, s));
    }
    offset += table.words(l);
  }
  in.log_mass = table.log_mass[static_cast<std::size_t>(table.depth)];
  return in;
}

template <class F>
auto with_threads(int k, F&& f) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(k);
  auto r = f();
  omp_set_num_threads(before);
  return r;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("log phi from log singular values") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const auto sv = singular_values(testing::random_matrix(rng, 3));
      double logs[3];
      for (int i = 0; i < 3; ++i) logs[i] = std::log(sv[i]);
      for (double s : {0.2, 1.0, 1.7, 2.0, 2.4, 3.0, 3.5}) {
        CHECK(log_phi_from_logs(logs, 3, s) == doctest::Approx(log_phi_s(sv, s)).epsilon(1e-12));
      }
    }
    CHECK(words_up_to(2, 3) == 14);
    CHECK(words_up_to(3, 100) == UINT64_MAX);
  }

  TEST_CASE("word tables agree across builds") {
    const auto ifs = three_maps();
    const auto mu = markov3();
    const auto a = kernels::serial::build_word_table(ifs, mu, 6);
    const auto b = kernels::omp::build_word_table(ifs, mu, 6);
    REQUIRE(a.depth == b.depth);
    for (int k = 1; k <= 6; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      REQUIRE(a.log_mass[kk].size() == b.log_mass[kk].size());
      for (std::size_t i = 0; i < a.log_mass[kk].size(); ++i) {
        CHECK(a.log_mass[kk][i] == doctest::Approx(b.log_mass[kk][i]).epsilon(1e-12));
        const Word w = Word::from_index(i, k, 3);
        CHECK(a.log_mass[kk][i] == doctest::Approx(mu.log_cylinder_mass(w)).epsilon(1e-12));
      }
      for (std::size_t i = 0; i < a.log_sv[kk].size(); ++i) {
        CHECK(a.log_sv[kk][i] == doctest::Approx(b.log_sv[kk][i]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("weighted sums agree across builds and thread counts") {
    const auto ifs = three_maps();
    const auto mu = markov3();
    const auto table = kernels::omp::build_word_table(ifs, mu, 8);
    for (double s : {0.4, 1.3, 2.6}) {
      const auto ser = kernels::serial::log_weighted_sums(ifs, mu, s, -1.0, 2.0, 8);
      const auto one = with_threads(1, [&] { return kernels::omp::log_weighted_sums(ifs, mu, s, -1.0, 2.0, 8); });
      const auto four = with_threads(4, [&] { return kernels::omp::log_weighted_sums(ifs, mu, s, -1.0, 2.0, 8); });
      CHECK(one == four);
      for (int k = 1; k <= 8; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        CHECK(one[kk] == doctest::Approx(ser[kk]).epsilon(1e-12));
        CHECK(kernels::omp::log_weighted_sum(table, k, s, -1.0, 2.0) == doctest::Approx(ser[kk]).epsilon(1e-12));
        if (k <= 5) {
          CHECK(kernels::serial::log_weighted_sum(ifs, mu, k, s, -1.0, 2.0) == doctest::Approx(ser[kk]).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("clouds are identical across builds and thread counts") {
    const auto ifs = three_maps();
    const auto mu = markov3();
    const DisplacementField field(12, 2, 1.0);
    const auto ser = kernels::serial::sample_cloud(ifs, mu, field, 3000, 25, 77);
    const auto one = with_threads(1, [&] { return kernels::omp::sample_cloud(ifs, mu, field, 3000, 25, 77); });
    const auto four = with_threads(4, [&] { return kernels::omp::sample_cloud(ifs, mu, field, 3000, 25, 77); });
    CHECK(ser == one);
    CHECK(one == four);
    // The first points do not depend on the total count.
    const auto fewer = kernels::omp::sample_cloud(ifs, mu, field, 100, 25, 77);
    CHECK(std::equal(fewer.begin(), fewer.end(), one.begin()));
  }

  TEST_CASE("mesh and ball counts agree across builds") {
    const auto ifs = three_maps();
    const DisplacementField field(5, 2, 1.0);
    const auto coords = kernels::omp::sample_cloud(ifs, MeasureModel::bernoulli({0.5, 0.3, 0.2}), field, 4000, 20, 1);
    for (double r : {1.0, 0.1, 0.013}) {
      const auto a = kernels::serial::mesh_counts(coords, 2, r);
      const auto b = with_threads(4, [&] { return kernels::omp::mesh_counts(coords, 2, r); });
      CHECK(a == b);
      std::uint64_t total = 0;
      for (auto c : a) total += c;
      CHECK(total == 4000);
      const auto ba = kernels::serial::ball_counts(coords, 2, 2500, r);
      const auto bb = with_threads(4, [&] { return kernels::omp::ball_counts(coords, 2, 2500, r); });
      CHECK(ba == bb);
    }
    // Brute check of the serial ball count on a few centres.
    const auto counts = kernels::serial::ball_counts(coords, 2, 500, 0.05);
    for (std::size_t i = 0; i < 500; i += 97) {
      std::uint32_t c = 0;
      for (std::size_t j = 0; j < 500; ++j) {
        if (j == i) continue;
        const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
        c += std::sqrt(dx * dx + dy * dy) <= 0.05;
      }
      CHECK(counts[i] == c);
    }
  }

  TEST_CASE("truncated inner sums match a direct sum over rays") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.3}), Matrix::from_rows({{0.4, 0.1}, {0.0, 0.35}})};
    const auto mu = MeasureModel::bernoulli({0.6, 0.4});
    const int depth = 4;
    const auto table = kernels::omp::build_word_table(ifs, mu, depth);
    for (int n : {1, 2}) {
      const double s = 0.7;
      const auto in = energy_input(table, s, n);
      const auto ser = kernels::serial::truncated_inner_sums(in);
      const auto par = with_threads(4, [&] { return kernels::omp::truncated_inner_sums(in); });
      REQUIRE(ser.size() == 16);
      for (std::size_t j = 0; j < 16; ++j) {
        CHECK(par[j] == doctest::Approx(ser[j]).epsilon(1e-12));
        const Word outer = Word::from_index(j, depth, 2);
        double direct = 0;
        for (std::uint64_t a = 0; a < 16; ++a) {
          const Word ra = Word::from_index(a, depth, 2);
          if (n == 1) {
            direct += mu.cylinder_mass(ra) / multienergy_kernel(ifs, s, {ra, outer}, JoinResolution::collapse);
            continue;
          }
          for (std::uint64_t b = 0; b < 16; ++b) {
            const Word rb = Word::from_index(b, depth, 2);
            direct += mu.cylinder_mass(ra) * mu.cylinder_mass(rb) /
                      multienergy_kernel(ifs, s, {ra, rb, outer}, JoinResolution::collapse);
          }
        }
        CHECK(ser[j] == doctest::Approx(direct).epsilon(1e-12));
      }
    }
  }
}
