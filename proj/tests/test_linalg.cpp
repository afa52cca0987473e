#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qdim/codespace.hpp"
#include "qdim/error.hpp"
#include "qdim/linalg.hpp"
#include "support.hpp"

using namespace qdim;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.dim(), m.dim());
  for (int r = 0; r < m.dim(); ++r)
    for (int c = 0; c < m.dim(); ++c) e(r, c) = m(r, c);
  return e;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("singular values agree with an Eigen SVD") {
    std::mt19937_64 rng(11);
    for (int n = 1; n <= kMaxDim; ++n) {
      for (int trial = 0; trial < 40; ++trial) {
        const Matrix m = testing::random_matrix(rng, n);
        const auto sv = singular_values(m);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
        const auto ref = svd.singularValues();
        for (int i = 0; i < n; ++i) {
          CHECK(sv[i] == doctest::Approx(ref(i)).epsilon(1e-10));
          if (i > 0) CHECK(sv[i - 1] >= sv[i]);
        }
      }
    }
  }

  TEST_CASE("diagonal and rotation singular values") {
    const auto sv = singular_values(Matrix::diagonal({0.3, -0.5}));
    CHECK(sv[0] == doctest::Approx(0.5));
    CHECK(sv[1] == doctest::Approx(0.3));
    const auto rot = singular_values(Matrix::scaled_rotation(0.7, 1.1));
    CHECK(rot[0] == doctest::Approx(0.7));
    CHECK(rot[1] == doctest::Approx(0.7));
  }

  TEST_CASE("phi^s branches") {
    const Matrix t = Matrix::diagonal({0.5, 0.3});
    CHECK_THROWS_AS(phi_s(t, 0.0), InvalidInput);
    CHECK(phi_s(t, 1.0) == doctest::Approx(0.5));
    CHECK(phi_s(t, 1.5) == doctest::Approx(0.5 * std::sqrt(0.3)));
    CHECK(phi_s(t, 2.0) == doctest::Approx(0.15));
    CHECK(phi_s(t, 3.0) == doctest::Approx(std::pow(0.15, 1.5)));
    CHECK(phi_index(1.0, 2) == 1);
    CHECK(phi_index(1.0001, 2) == 2);
    CHECK(phi_index(0.2, 2) == 1);
    // Continuity across the integer breakpoint.
    CHECK(phi_s(t, 1.0 + 1e-12) == doctest::Approx(phi_s(t, 1.0)).epsilon(1e-9));
    CHECK(log_phi_s(singular_values(t), 0.7) == doctest::Approx(0.7 * std::log(0.5)));
  }

  TEST_CASE("phi^s is submultiplicative") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 3;
      const Matrix a = testing::random_matrix(rng, n), b = testing::random_matrix(rng, n);
      for (double s : {0.3, 1.0, 1.6, 2.5, 3.9}) {
        CHECK(phi_s(a * b, s) <= phi_s(a, s) * phi_s(b, s) * (1 + 1e-9));
      }
    }
  }

  TEST_CASE("contractions are validated") {
    CHECK_THROWS_AS(LinearContraction(Matrix::diagonal({1.2, 0.3})), InvalidInput);
    CHECK_THROWS_AS(LinearContraction(Matrix::diagonal({0.5, 0.0})), InvalidInput);
    CHECK_THROWS_AS(LinearContraction(Matrix::diagonal({0.5, NAN})), InvalidInput);
    CHECK_NOTHROW(LinearContraction(Matrix::from_rows({{0.5, 0.2}, {0.0, 0.3}})));
  }

  TEST_CASE("ifs bounds and composition") {
    const AffineIFS ifs{Matrix::diagonal({0.5, 0.4}), Matrix::diagonal({0.45, 0.3})};
    CHECK(ifs.a_plus() == doctest::Approx(0.5));
    CHECK(ifs.a_minus() == doctest::Approx(0.3));
    CHECK(compose(ifs, Word{}) == Matrix::identity(2));
    const Matrix t = compose(ifs, Word{0, 1, 1});
    CHECK(t(0, 0) == doctest::Approx(0.5 * 0.45 * 0.45));
    CHECK(t(1, 1) == doctest::Approx(0.4 * 0.3 * 0.3));
    CHECK_THROWS_AS((AffineIFS{Matrix::diagonal({0.5}), Matrix::diagonal({0.5, 0.5})}), InvalidInput);
  }
}
