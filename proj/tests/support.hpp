#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace testing {

inline qdim::Matrix random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  qdim::Matrix m(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = scale * u(rng);
  return m;
}

/// Random invertible matrix with operator norm in [0.1, max_norm].
inline qdim::Matrix random_contraction(std::mt19937_64& rng, int n, double max_norm = 0.9) {
  std::uniform_real_distribution<double> u(0.1, max_norm);
  for (;;) {
    qdim::Matrix m = random_matrix(rng, n);
    const auto sv = qdim::singular_values(m);
    if (sv[n - 1] < 1e-3 * sv[0]) continue;
    const double target = u(rng);
    qdim::Matrix out(n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out(r, c) = m(r, c) * target / sv[0];
    return out;
  }
}

inline std::vector<double> random_probs(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> p(static_cast<std::size_t>(m));
  double t = 0;
  for (auto& x : p) t += (x = u(rng));
  for (auto& x : p) x /= t;
  return p;
}

inline std::vector<std::vector<double>> random_potential(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> f(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
  for (auto& row : f)
    for (auto& x : row) x = u(rng);
  return f;
}

inline bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace testing
