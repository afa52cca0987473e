#include "qdim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "qdim/codespace.hpp"
#include "qdim/error.hpp"

namespace qdim {

Matrix::Matrix(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidInput("matrix dimension must be in 1.." + std::to_string(kMaxDim));
  }
}

Matrix Matrix::identity(int dim) {
  Matrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::initializer_list<double> entries) {
  return diagonal(std::span<const double>(entries.begin(), entries.size()));
}

Matrix Matrix::diagonal(std::span<const double> entries) {
  Matrix m(static_cast<int>(entries.size()));
  for (int i = 0; i < m.dim(); ++i) m(i, i) = entries[static_cast<std::size_t>(i)];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<int>(rows.size()));
  int r = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != m.dim()) throw InvalidInput("matrix rows must be square");
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix Matrix::scaled_rotation(double scale, double angle) {
  return from_rows({{scale * std::cos(angle), -scale * std::sin(angle)},
                    {scale * std::sin(angle), scale * std::cos(angle)}});
}

Matrix Matrix::transpose() const {
  Matrix t(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::determinant() const {
  // LU with partial pivoting on a copy.
  Matrix lu = *this;
  double det = 1.0;
  for (int k = 0; k < dim_; ++k) {
    int piv = k;
    for (int r = k + 1; r < dim_; ++r)
      if (std::abs(lu(r, k)) > std::abs(lu(piv, k))) piv = r;
    if (lu(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int c = 0; c < dim_; ++c) std::swap(lu(k, c), lu(piv, c));
      det = -det;
    }
    det *= lu(k, k);
    for (int r = k + 1; r < dim_; ++r) {
      const double f = lu(r, k) / lu(k, k);
      for (int c = k; c < dim_; ++c) lu(r, c) -= f * lu(k, c);
    }
  }
  return det;
}

bool Matrix::all_finite() const {
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c)
      if (!std::isfinite((*this)(r, c))) return false;
  return true;
}

void Matrix::apply(const double* x, double* y) const noexcept {
  for (int r = 0; r < dim_; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim_; ++c) acc += (*this)(r, c) * x[c];
    y[r] = acc;
  }
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix p(a.dim_);
  const int n = a.dim_;
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) {
      const double ark = a(r, k);
      for (int c = 0; c < n; ++c) p(r, c) += ark * b(k, c);
    }
  return p;
}

bool operator==(const Matrix& a, const Matrix& b) {
  if (a.dim_ != b.dim_) return false;
  for (int r = 0; r < a.dim_; ++r)
    for (int c = 0; c < a.dim_; ++c)
      if (a(r, c) != b(r, c)) return false;
  return true;
}

double SingularValues::product() const noexcept {
  double p = 1.0;
  for (int i = 0; i < dim; ++i) p *= values[i];
  return p;
}

namespace {

SingularValues two_by_two(const Matrix& t) {
  // Stable closed form: sigma_{1,2} = Q +- R.
  const double a = t(0, 0), b = t(0, 1), c = t(1, 0), d = t(1, 1);
  const double e = 0.5 * (a + d), f = 0.5 * (a - d);
  const double g = 0.5 * (c + b), h = 0.5 * (c - b);
  const double q = std::hypot(e, h), r = std::hypot(f, g);
  SingularValues sv;
  sv.dim = 2;
  sv.values[0] = q + r;
  sv.values[1] = std::abs(a * d - b * c) / sv.values[0];
  return sv;
}

// One-sided (Hestenes) Jacobi: orthogonalise the columns of T by plane
// rotations; the column norms are then the singular values. This is the
// Jacobi iteration for the symmetric matrix T^T T, applied implicitly, and
// keeps small singular values to full relative accuracy.
SingularValues jacobi(const Matrix& t) {
  const int n = t.dim();
  Matrix a = t;
  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (int i = 0; i < n; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double tn = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + tn * tn);
        const double sn = cs * tn;
        for (int i = 0; i < n; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = cs * ap - sn * aq;
          a(i, q) = sn * ap + cs * aq;
        }
      }
    }
    if (!rotated) break;
  }
  SingularValues sv;
  sv.dim = n;
  for (int c = 0; c < n; ++c) {
    double nrm = 0;
    for (int i = 0; i < n; ++i) nrm += a(i, c) * a(i, c);
    sv.values[c] = std::sqrt(nrm);
  }
  std::sort(sv.values.begin(), sv.values.begin() + n, std::greater<>());
  return sv;
}

}  // namespace

SingularValues singular_values(const Matrix& t) {
  if (t.dim() < 1) throw InvalidInput("singular_values: empty matrix");
  if (!t.all_finite()) throw InvalidInput("singular_values: non-finite matrix entry");
  SingularValues sv;
  if (t.dim() == 1) {
    sv.dim = 1;
    sv.values[0] = std::abs(t(0, 0));
  } else if (t.dim() == 2) {
    sv = two_by_two(t);
  } else {
    sv = jacobi(t);
  }
  if (!(sv.values[sv.dim - 1] > 0.0)) throw InvalidInput("singular_values: singular matrix");
  return sv;
}

int phi_index(double s, int dim) {
  if (s > dim) return dim + 1;
  return std::max(1, static_cast<int>(std::ceil(s)));
}

double log_phi_s(const SingularValues& sv, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("phi_s: s must be positive and finite");
  const int n = sv.dim;
  double acc = 0.0;
  if (s > n) {
    for (int i = 0; i < n; ++i) acc += std::log(sv.values[i]);
    return acc * s / n;
  }
  const int j = phi_index(s, n);
  for (int i = 0; i < j - 1; ++i) acc += std::log(sv.values[i]);
  return acc + (s - j + 1) * std::log(sv.values[j - 1]);
}

double phi_s(const SingularValues& sv, double s) { return std::exp(log_phi_s(sv, s)); }

double phi_s(const Matrix& t, double s) { return phi_s(singular_values(t), s); }

LinearContraction::LinearContraction(Matrix m) : m_(m) {
  if (!m_.all_finite()) throw InvalidInput("map has a non-finite entry");
  if (m_.determinant() == 0.0) throw InvalidInput("map is singular");
  sv_ = qdim::singular_values(m_);
  if (!(sv_[0] < 1.0)) {
    throw InvalidInput("map is not contracting (largest singular value " + std::to_string(sv_[0]) + " >= 1)");
  }
}

namespace {
std::vector<LinearContraction> to_contractions(std::initializer_list<Matrix> maps) {
  std::vector<LinearContraction> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.emplace_back(m);
  return out;
}
}  // namespace

AffineIFS::AffineIFS(std::initializer_list<Matrix> maps, double region_radius)
    : AffineIFS(to_contractions(maps), region_radius) {}

AffineIFS::AffineIFS(std::vector<LinearContraction> maps, double region_radius)
    : maps_(std::move(maps)), region_radius_(region_radius) {
  if (maps_.size() < 2) throw InvalidInput("an IFS needs at least two maps");
  if (maps_.size() > 255) throw InvalidInput("at most 255 maps are supported");
  if (!(region_radius_ > 0.0) || !std::isfinite(region_radius_)) {
    throw InvalidInput("region_radius must be positive");
  }
  dim_ = maps_.front().dim();
  a_minus_ = 1.0;
  a_plus_ = 0.0;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    if (maps_[i].dim() != dim_) {
      throw InvalidInput("map " + std::to_string(i + 1) + " has dimension " + std::to_string(maps_[i].dim()) +
                         ", expected " + std::to_string(dim_));
    }
    const auto& sv = maps_[i].singular_values();
    a_minus_ = std::min(a_minus_, sv[dim_ - 1]);
    a_plus_ = std::max(a_plus_, sv[0]);
  }
}

Matrix compose(const AffineIFS& ifs, const Word& word) {
  Matrix p = Matrix::identity(ifs.dim());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word[i] >= ifs.size()) {
      throw InvalidInput("compose: symbol " + std::to_string(word[i] + 1) + " out of range 1.." +
                         std::to_string(ifs.size()));
    }
    p = p * ifs.map(word[i]).matrix();
  }
  return p;
}

ContractionBounds contraction_bounds(const AffineIFS& ifs) { return {ifs.a_minus(), ifs.a_plus()}; }

}  // namespace qdim
