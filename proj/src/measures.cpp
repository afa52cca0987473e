#include "qdim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qdim/error.hpp"
#include "qdim/util.hpp"

namespace qdim {

PerronData perron(const std::vector<double>& a, int m) {
  const auto n = static_cast<std::size_t>(m);
  if (a.size() != n * n) throw InvalidInput("perron: matrix size mismatch");
  for (double v : a)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("perron: matrix must be positive and finite");

  auto iterate = [&](bool transpose) {
    std::vector<double> x(n, 1.0 / m), y(n);
    double root = 0.0;
    for (int it = 0; it < 100000; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += (transpose ? a[j * n + i] : a[i * n + j]) * x[j];
        y[i] = acc;
      }
      const double sum = std::accumulate(y.begin(), y.end(), 0.0);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] /= sum;
        change = std::max(change, std::abs(y[i] - x[i]) / x[i]);
      }
      x.swap(y);
      root = sum;  // x had unit sum
      if (change < 1e-14) break;
    }
    return std::make_pair(root, x);
  };
  auto [root_r, right] = iterate(false);
  auto [root_l, left] = iterate(true);
  (void)root_l;
  return {root_r, std::move(left), std::move(right)};
}

MeasureModel MeasureModel::bernoulli(std::vector<double> probs) {
  if (probs.size() < 2) throw InvalidInput("bernoulli model needs at least two probabilities");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0) || !std::isfinite(probs[i])) {
      throw InvalidInput("probability p" + std::to_string(i + 1) + " must be positive");
    }
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("probabilities must sum to 1 (got " + std::to_string(sum) + ")");
  MeasureModel mm;
  mm.kind_ = Kind::bernoulli;
  mm.m_ = static_cast<int>(probs.size());
  mm.probs_ = probs;
  mm.pi_ = probs;
  mm.p_.resize(probs.size() * probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a)
    for (std::size_t b = 0; b < probs.size(); ++b) mm.p_[a * probs.size() + b] = probs[b];
  mm.finish();
  return mm;
}

MeasureModel MeasureModel::markov_gibbs(std::vector<std::vector<double>> f) {
  const std::size_t m = f.size();
  if (m < 2) throw InvalidInput("markov potential must be at least 2x2");
  std::vector<double> mat(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    if (f[a].size() != m) throw InvalidInput("markov potential must be square");
    for (std::size_t b = 0; b < m; ++b) {
      if (!std::isfinite(f[a][b])) throw InvalidInput("markov potential has a non-finite entry");
      mat[a * m + b] = std::exp(f[a][b]);
    }
  }
  const PerronData pd = perron(mat, static_cast<int>(m));
  MeasureModel mm;
  mm.kind_ = Kind::markov_gibbs;
  mm.m_ = static_cast<int>(m);
  mm.f_ = std::move(f);
  mm.lambda_ = pd.root;
  mm.pressure_ = std::log(pd.root);
  mm.left_ = pd.left;
  mm.right_ = pd.right;
  double lr = 0.0;
  for (std::size_t a = 0; a < m; ++a) lr += pd.left[a] * pd.right[a];
  mm.pi_.resize(m);
  mm.p_.resize(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    mm.pi_[a] = pd.left[a] * pd.right[a] / lr;
    for (std::size_t b = 0; b < m; ++b) mm.p_[a * m + b] = mat[a * m + b] * pd.right[b] / (pd.root * pd.right[a]);
  }
  // Concatenation ratio mu(C_ij)/(mu(C_i)mu(C_j)) depends only on the last
  // symbol a of i and the first symbol b of j: (l.r) M(a,b) / (lambda r_a l_b).
  double lo = 1.0, hi = 1.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const double ratio = lr * mat[a * m + b] / (pd.root * pd.right[a] * pd.left[b]);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  mm.min_ratio_ = lo;
  mm.qb_constant_ = std::min(std::cbrt(lo), std::cbrt(1.0 / hi));
  mm.finish();
  return mm;
}

void MeasureModel::finish() {
  const auto m = static_cast<std::size_t>(m_);
  log_pi_.resize(m);
  log_p_.resize(m * m);
  cum_pi_.resize(m);
  cum_p_.resize(m * m);
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    log_pi_[a] = std::log(pi_[a]);
    acc += pi_[a];
    cum_pi_[a] = acc;
  }
  for (std::size_t a = 0; a < m; ++a) {
    acc = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      log_p_[a * m + b] = std::log(p_[a * m + b]);
      acc += p_[a * m + b];
      cum_p_[a * m + b] = acc;
    }
  }
}

int MeasureModel::draw(int prev, double u) const noexcept {
  const double* cum = prev < 0 ? cum_pi_.data() : cum_p_.data() + static_cast<std::size_t>(prev * m_);
  // Scale by the row total so rounding in the cumulative sums never strands u.
  const double x = u * cum[m_ - 1];
  for (int b = 0; b < m_ - 1; ++b)
    if (x < cum[b]) return b;
  return m_ - 1;
}

double MeasureModel::log_cylinder_mass(const Word& w) const {
  if (w.empty()) return 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] >= m_) throw InvalidInput("cylinder_mass: symbol " + std::to_string(w[i] + 1) + " out of range");
  }
  double acc = log_pi_[w[0]];
  for (std::size_t i = 1; i < w.size(); ++i) acc += log_transition(w[i - 1], w[i]);
  return acc;
}

double MeasureModel::cylinder_mass(const Word& w) const { return std::exp(log_cylinder_mass(w)); }

double MeasureModel::ergodic_sum(const Word& w) const {
  if (kind_ != Kind::markov_gibbs) throw InvalidInput("ergodic_sum needs a Markov-Gibbs model");
  if (w.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) acc += f_[w[i - 1]][w[i]];
  const std::size_t last = w[w.size() - 1];
  double closure = 0.0;
  for (int b = 0; b < m_; ++b) closure += std::exp(f_[last][static_cast<std::size_t>(b)]) * right_[static_cast<std::size_t>(b)];
  return acc + std::log(closure / right_[last]);
}

double MeasureModel::gibbs_constant() const {
  if (kind_ != Kind::markov_gibbs) return 1.0;
  double lr = 0.0;
  for (int a = 0; a < m_; ++a) lr += left_[static_cast<std::size_t>(a)] * right_[static_cast<std::size_t>(a)];
  double a_const = 1.0;
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b) {
      const double ratio = left_[static_cast<std::size_t>(a)] * right_[static_cast<std::size_t>(b)] / lr;
      a_const = std::min({a_const, ratio, 1.0 / ratio});
    }
  return a_const;
}

std::uint64_t MeasureModel::fingerprint() const {
  std::string desc = kind_ == Kind::bernoulli ? "bernoulli" : "markov";
  if (kind_ == Kind::bernoulli) {
    for (double p : probs_) desc += ' ' + format_double(p);
  } else {
    for (const auto& row : f_)
      for (double v : row) desc += ' ' + format_double(v);
  }
  return fnv1a(desc);
}

}  // namespace qdim
