#pragma once

// The random construction: a displacement omega_w in D for every finite word
// w, the truncated projection
//
//   Pi_K(i) = omega_{i|1} + T_{i|1} omega_{i|2} + ... + T_{i|K-1} omega_{i|K},
//
// and clouds of projected mu-random words sharing one field.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qdim/codespace.hpp"
#include "qdim/linalg.hpp"
#include "qdim/measures.hpp"

namespace qdim {

/// Deterministic uniform displacements on the box [-R, R]^N, keyed by a
/// 128-bit incremental hash of the word.
class DisplacementField {
 public:
  struct Key {
    std::uint64_t a = 0x243f6a8885a308d3ULL;
    std::uint64_t b = 0x13198a2e03707344ULL;
  };

  /// radius 0 gives the degenerate all-zero field.
  DisplacementField(std::uint64_t seed, int dim, double radius);

  static Key extend(Key k, Symbol c) noexcept {
    k.a = mix(k.a ^ (0x100u | c));
    k.b = mix(k.b + 0x9e3779b97f4a7c15ULL * (c + 1u)) ^ (k.a >> 17);
    return k;
  }
  static Key key_of(const Word& w) noexcept;

  void displacement(Key k, double* out) const noexcept;
  /// Throws for the empty word (no displacement at the root).
  std::vector<double> displacement(const Word& w) const;

  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return dim_; }
  double radius() const noexcept { return radius_; }

 private:
  static std::uint64_t mix(std::uint64_t z) noexcept;

  std::uint64_t seed_;
  int dim_;
  double radius_;
};

/// a_+^K * R * sqrt(N) / (1 - a_+).
double truncation_bound(const AffineIFS& ifs, double radius, int depth);

/// Partial sum Pi_K for the first K symbols of `word` into `out`, taking
/// displacements from `disp(key, out)`.
template <class Disp>
void project_into(const AffineIFS& ifs, const Word& word, int depth, Disp&& disp, double* out) {
  const int n = ifs.dim();
  double omega[kMaxDim], tw[kMaxDim];
  for (int i = 0; i < n; ++i) out[i] = 0.0;
  Matrix prod = Matrix::identity(n);
  DisplacementField::Key key;
  for (int k = 0; k < depth; ++k) {
    const Symbol c = word[static_cast<std::size_t>(k)];
    key = DisplacementField::extend(key, c);
    disp(key, omega);
    prod.apply(omega, tw);
    for (int i = 0; i < n; ++i) out[i] += tw[i];
    if (k + 1 < depth) prod = prod * ifs.map(c).matrix();
  }
}

struct CloudPoint {
  std::vector<double> position;
  Word word;
  double truncation_bound = 0.0;
};

CloudPoint project(const AffineIFS& ifs, const DisplacementField& field, const Word& word, int depth);

struct PointCloud {
  int dim = 0;
  /// Row-major, size() * dim.
  std::vector<double> coords;
  std::uint64_t seed = 0;
  int depth = 0;
  std::uint64_t model_hash = 0;
  double truncation_bound = 0.0;

  std::size_t size() const noexcept { return dim ? coords.size() / static_cast<std::size_t>(dim) : 0; }
  const double* point(std::size_t i) const noexcept { return coords.data() + i * static_cast<std::size_t>(dim); }
};

/// Fingerprint of maps, region radius and measure.
std::uint64_t model_hash(const AffineIFS& ifs, const MeasureModel& model);

/// n mu-distributed words of length `depth`, projected under one field drawn
/// from `seed`. Point i uses its own word stream, so the first n points do
/// not depend on the total count or the thread count.
PointCloud sample_cloud(const AffineIFS& ifs, const MeasureModel& model, std::uint64_t seed, std::size_t n,
                        int depth);

/// Smallest K with truncation_bound(K) <= target.
int depth_for_bound(const AffineIFS& ifs, double radius, double target);

/// Text table: header lines "# key value" then one row per point, 17
/// significant digits, '.' decimal separator.
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_cloud(const std::filesystem::path& path);

}  // namespace qdim
