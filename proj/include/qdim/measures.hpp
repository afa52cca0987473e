#pragma once

// Cylinder measures on code space.
//
// Both model kinds are stored as a stationary Markov chain (initial vector pi,
// transition matrix P), so mu(C_w) = pi_{w1} P(w1,w2) ... P(w_{k-1},w_k).
// A Bernoulli model has pi = p and every row of P equal to p.
//
// A Markov-Gibbs model is built from a potential f(a,b) depending on the first
// two symbols. With M = exp(f), lambda its Perron root and l, r the left and
// right Perron vectors,
//
//   mu(C_w) = l_{w1} r_{wk} / (l.r) * lambda^{-(k-1)} * exp(f(w1,w2) + ... + f(w_{k-1},w_k)).
//
// The ergodic sum S_k f(w) is taken over the k-1 interior pairs plus the
// closure term log(sum_b M(w_k,b) r_b / r_{w_k}), the one-step transfer
// average from the last symbol under the stationary extension. That closure
// equals P(f) identically, so mu(C_w) / exp(-k P(f) + S_k f(w)) =
// l_{w1} r_{wk} / (l.r) and the Gibbs constant is exact.

#include <cstdint>
#include <string>
#include <vector>

#include "qdim/codespace.hpp"

namespace qdim {

class MeasureModel {
 public:
  enum class Kind { bernoulli, markov_gibbs };

  /// p_i > 0, summing to 1 within 1e-12.
  static MeasureModel bernoulli(std::vector<double> probs);
  /// m x m potential f(a,b), finite entries.
  static MeasureModel markov_gibbs(std::vector<std::vector<double>> potential);

  Kind kind() const noexcept { return kind_; }
  int size() const noexcept { return m_; }

  double cylinder_mass(const Word& w) const;
  double log_cylinder_mass(const Word& w) const;

  double initial(int a) const { return pi_[static_cast<std::size_t>(a)]; }
  double transition(int a, int b) const { return p_[static_cast<std::size_t>(a * m_ + b)]; }
  double log_initial(int a) const { return log_pi_[static_cast<std::size_t>(a)]; }
  double log_transition(int a, int b) const { return log_p_[static_cast<std::size_t>(a * m_ + b)]; }

  /// Bernoulli weights (empty for Markov-Gibbs models).
  const std::vector<double>& probs() const noexcept { return probs_; }
  /// Potential f (empty for Bernoulli models).
  const std::vector<std::vector<double>>& potential() const noexcept { return f_; }

  /// log of the Perron root of exp(f); 0 for Bernoulli models.
  double pressure() const noexcept { return pressure_; }
  /// S_k f(w) with the closure term described above; throws for Bernoulli models.
  double ergodic_sum(const Word& w) const;
  /// Largest a <= 1 with a <= mu(C_w) / exp(-k P(f) + S_k f(w)) <= 1/a for all w.
  double gibbs_constant() const;
  /// Largest a <= 1 with a^3 <= mu(C_{ij}) / (mu(C_i) mu(C_j)) <= a^{-3} for all i, j.
  double quasi_bernoulli_constant() const noexcept { return qb_constant_; }
  /// min over i, j of mu(C_{ij}) / (mu(C_i) mu(C_j)); equals qb_constant^3.
  double min_concatenation_ratio() const noexcept { return min_ratio_; }

  /// Draw a word of length `depth` from mu given uniforms from `u01`.
  template <class Uniform>
  Word sample_word(int depth, Uniform&& u01) const {
    std::vector<Symbol> s(static_cast<std::size_t>(depth));
    int prev = -1;
    for (int i = 0; i < depth; ++i) {
      prev = draw(prev, u01());
      s[static_cast<std::size_t>(i)] = static_cast<Symbol>(prev);
    }
    return Word(std::move(s));
  }
  /// One chain step: first symbol when prev < 0.
  int draw(int prev, double u) const noexcept;

  /// Stable 64-bit fingerprint of the model parameters.
  std::uint64_t fingerprint() const;

 private:
  MeasureModel() = default;
  void finish();

  Kind kind_ = Kind::bernoulli;
  int m_ = 0;
  std::vector<double> probs_;
  std::vector<std::vector<double>> f_;
  std::vector<double> pi_, p_, log_pi_, log_p_;
  std::vector<double> cum_pi_, cum_p_;
  std::vector<double> left_, right_;
  double lambda_ = 1.0;
  double pressure_ = 0.0;
  double qb_constant_ = 1.0;
  double min_ratio_ = 1.0;
};

struct PerronData {
  double root;
  std::vector<double> left;
  std::vector<double> right;
};

/// Perron root and vectors of a positive square matrix (row-major) by power
/// iteration to relative change 1e-14. Vectors are normalised to unit sum.
PerronData perron(const std::vector<double>& matrix, int m);

}  // namespace qdim
