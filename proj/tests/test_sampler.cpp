#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qdim/error.hpp"
#include "qdim/rng.hpp"
#include "qdim/sampler.hpp"

using namespace qdim;

namespace {

AffineIFS three_maps(double radius = 1.0) {
  return AffineIFS({LinearContraction(Matrix::diagonal({0.5, 0.4})), LinearContraction(Matrix::diagonal({0.45, 0.3})),
                    LinearContraction(Matrix::from_rows({{0.4, 0.1}, {0.0, 0.35}}))},
                   radius);
}

// Pi_K written out term by term from compose() and per-word displacements.
std::vector<double> direct_projection(const AffineIFS& ifs, const DisplacementField& field, const Word& w, int depth) {
  std::vector<double> out(static_cast<std::size_t>(ifs.dim()), 0.0);
  for (int k = 1; k <= depth; ++k) {
    const Matrix t = compose(ifs, w.prefix(static_cast<std::size_t>(k - 1)));
    const auto omega = field.displacement(w.prefix(static_cast<std::size_t>(k)));
    for (int r = 0; r < ifs.dim(); ++r)
      for (int c = 0; c < ifs.dim(); ++c) out[static_cast<std::size_t>(r)] += t(r, c) * omega[static_cast<std::size_t>(c)];
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("displacements") {
    const DisplacementField f(3, 2, 0.7);
    const auto a = f.displacement(Word{0, 1});
    CHECK(a == f.displacement(Word{0, 1}));
    CHECK(a != f.displacement(Word{1, 0}));
    CHECK(a != DisplacementField(4, 2, 0.7).displacement(Word{0, 1}));
    CHECK_THROWS_AS(f.displacement(Word{}), InvalidInput);
    CHECK(DisplacementField(3, 2, 0.0).displacement(Word{2}) == std::vector<double>{0.0, 0.0});
    // Uniform on the box: mean near 0, variance near R^2 / 3.
    double mean = 0, var = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double x = f.displacement(Word::from_index(static_cast<std::uint64_t>(i), 12, 3))[0];
      REQUIRE(std::abs(x) <= 0.7);
      mean += x;
      var += x * x;
    }
    CHECK(std::abs(mean / n) < 0.02);
    CHECK(var / n == doctest::Approx(0.49 / 3).epsilon(0.03));
  }

  TEST_CASE("projection matches the defining series") {
    const auto ifs = three_maps();
    const DisplacementField field(9, 2, 1.0);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> sym(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
      Word w;
      for (int i = 0; i < 30; ++i) w.push_back(static_cast<Symbol>(sym(rng)));
      const auto p = project(ifs, field, w, 30);
      const auto ref = direct_projection(ifs, field, w, 30);
      CHECK(p.position[0] == doctest::Approx(ref[0]).epsilon(1e-13));
      CHECK(p.position[1] == doctest::Approx(ref[1]).epsilon(1e-13));
      // Truncating at K moves the point by at most the truncation bound.
      const auto shallow = project(ifs, field, w, 10);
      CHECK(std::hypot(shallow.position[0] - p.position[0], shallow.position[1] - p.position[1]) <=
            shallow.truncation_bound);
    }
    CHECK_THROWS_AS(project(ifs, field, Word{0, 1}, 3), InvalidInput);
  }

  TEST_CASE("depth for a truncation target") {
    const auto ifs = three_maps();
    const int k = depth_for_bound(ifs, 1.0, 1e-6);
    CHECK(truncation_bound(ifs, 1.0, k) <= 1e-6);
    CHECK(truncation_bound(ifs, 1.0, k - 1) > 1e-6);
  }

  TEST_CASE("clouds are reproducible and round-trip through files") {
    const auto ifs = three_maps();
    const auto mu = MeasureModel::bernoulli({0.5, 0.3, 0.2});
    const auto a = sample_cloud(ifs, mu, 17, 2000, 30);
    const auto b = sample_cloud(ifs, mu, 17, 2000, 30);
    CHECK(a.coords == b.coords);
    CHECK(sample_cloud(ifs, mu, 18, 2000, 30).coords != a.coords);
    CHECK(a.model_hash == model_hash(ifs, mu));
    CHECK(model_hash(three_maps(0.5), mu) != a.model_hash);

    const auto dir = std::filesystem::temp_directory_path() / "qdim_sampler_test";
    std::filesystem::create_directories(dir);
    write_cloud(a, dir / "a.txt");
    write_cloud(b, dir / "b.txt");
    CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
    const auto text = slurp(dir / "a.txt");
    CHECK(text.rfind("# qdim-cloud 1\n# dim 2\n# count 2000\n# seed 17\n# depth 30\n# model_hash ", 0) == 0);
    const auto back = read_cloud(dir / "a.txt");
    CHECK(back.coords == a.coords);
    CHECK(back.seed == 17);
    CHECK(back.depth == 30);
    CHECK(back.model_hash == a.model_hash);
    CHECK(back.truncation_bound == a.truncation_bound);
    CHECK_THROWS_AS(read_cloud(dir / "missing.txt"), InvalidInput);
    std::ofstream(dir / "bad.txt") << "# dim 2\n# count 3\n1 2\n3 4\n";
    CHECK_THROWS_AS(read_cloud(dir / "bad.txt"), InvalidInput);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("sampling arguments") {
    const auto ifs = three_maps();
    CHECK_THROWS_AS(sample_cloud(ifs, MeasureModel::bernoulli({0.5, 0.5}), 1, 10, 5), InvalidInput);
    CHECK_THROWS_AS(sample_cloud(ifs, MeasureModel::bernoulli({0.5, 0.3, 0.2}), 1, 10, 0), InvalidInput);
  }
}
