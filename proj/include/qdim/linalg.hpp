#pragma once

// Small dense matrix numerics: singular values, the singular value function
// phi^s, composed maps T_w = T_{w1} ... T_{wk}, and contraction bounds.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qdim {

class Word;

inline constexpr int kMaxDim = 8;

/// Square matrix of dimension <= kMaxDim with inline storage (row-major).
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int dim);

  static Matrix identity(int dim);
  static Matrix diagonal(std::initializer_list<double> entries);
  static Matrix diagonal(std::span<const double> entries);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Rotation by `angle` scaled by `scale` (dim 2).
  static Matrix scaled_rotation(double scale, double angle);

  int dim() const noexcept { return dim_; }
  double operator()(int r, int c) const noexcept { return a_[r * kMaxDim + c]; }
  double& operator()(int r, int c) noexcept { return a_[r * kMaxDim + c]; }

  Matrix transpose() const;
  double determinant() const;
  bool all_finite() const;

  /// y = M x for x, y of length dim().
  void apply(const double* x, double* y) const noexcept;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend bool operator==(const Matrix& a, const Matrix& b);

 private:
  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

/// alpha_1 >= ... >= alpha_N, stored inline.
struct SingularValues {
  int dim = 0;
  std::array<double, kMaxDim> values{};

  double operator[](int i) const noexcept { return values[i]; }
  std::span<const double> view() const noexcept { return {values.data(), static_cast<std::size_t>(dim)}; }
  double product() const noexcept;
};

/// Singular values in descending order. Closed forms for N <= 2, one-sided
/// Jacobi for larger N. Throws InvalidInput on singular or non-finite input.
SingularValues singular_values(const Matrix& t);

/// phi^s from precomputed singular values. Uses the left-closed branch
/// j - 1 < s <= j so phi^j = alpha_1 ... alpha_j, and (det)^{s/N} for s > N.
double phi_s(const SingularValues& sv, double s);
double log_phi_s(const SingularValues& sv, double s);
double phi_s(const Matrix& t, double s);

/// Index j (1-based) of the singular value carrying the fractional exponent.
int phi_index(double s, int dim);

class LinearContraction {
 public:
  /// Validates non-singularity and alpha_1 < 1.
  explicit LinearContraction(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  const SingularValues& singular_values() const noexcept { return sv_; }
  int dim() const noexcept { return m_.dim(); }

 private:
  Matrix m_;
  SingularValues sv_;
};

/// The linear parts T_1..T_m plus the half-width of the displacement box D.
class AffineIFS {
 public:
  AffineIFS(std::vector<LinearContraction> maps, double region_radius = 1.0);
  AffineIFS(std::initializer_list<Matrix> maps, double region_radius = 1.0);

  int dim() const noexcept { return dim_; }
  int size() const noexcept { return static_cast<int>(maps_.size()); }
  const LinearContraction& map(int i) const { return maps_.at(static_cast<std::size_t>(i)); }
  const std::vector<LinearContraction>& maps() const noexcept { return maps_; }
  double region_radius() const noexcept { return region_radius_; }
  double a_minus() const noexcept { return a_minus_; }
  double a_plus() const noexcept { return a_plus_; }

 private:
  std::vector<LinearContraction> maps_;
  double region_radius_;
  int dim_ = 0;
  double a_minus_ = 0.0;
  double a_plus_ = 0.0;
};

struct ContractionBounds {
  double a_minus;
  double a_plus;
};

/// Product T_{w1} T_{w2} ... T_{wk}; identity for the empty word.
Matrix compose(const AffineIFS& ifs, const Word& word);

ContractionBounds contraction_bounds(const AffineIFS& ifs);

}  // namespace qdim
