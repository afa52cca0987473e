#pragma once

// Symbolic code space: words, joins, cut-sets, join sets and join classes.
//
// Symbols are 0-based indices into the map list of an AffineIFS; text output
// prints them 1-based. Rays (infinite words) are represented by finite
// prefixes long enough to resolve every pairwise join.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace qdim {

class AffineIFS;

using Symbol = std::uint8_t;

class Word {
 public:
  Word() = default;
  Word(std::initializer_list<int> symbols);
  explicit Word(std::vector<Symbol> symbols) : s_(std::move(symbols)) {}

  std::size_t size() const noexcept { return s_.size(); }
  bool empty() const noexcept { return s_.empty(); }
  Symbol operator[](std::size_t i) const noexcept { return s_[i]; }
  const std::vector<Symbol>& symbols() const noexcept { return s_; }

  Word prefix(std::size_t k) const;
  Word child(Symbol c) const;
  void push_back(Symbol c) { s_.push_back(c); }
  /// True if `*this` is a curtailment of `other` (this <= other).
  bool is_prefix_of(const Word& other) const noexcept;

  /// Word of length `depth` whose base-m digits (most significant first) are `index`.
  static Word from_index(std::uint64_t index, int depth, int m);
  std::uint64_t index(int m) const noexcept;

  /// "(1,2,1)" style, 1-based.
  std::string to_string() const;

  friend bool operator==(const Word&, const Word&) = default;
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) { return a.s_ <=> b.s_; }

 private:
  std::vector<Symbol> s_;
};

/// Longest common prefix.
Word wedge(const Word& a, const Word& b);

struct JoinVertex {
  Word vertex;
  int multiplicity = 1;
  friend bool operator==(const JoinVertex&, const JoinVertex&) = default;
};

/// Multiset of join points with a designated root. Vertices are sorted by word.
struct JoinSet {
  Word root;
  std::vector<JoinVertex> vertices;

  int total_multiplicity() const noexcept;
  int spread() const noexcept { return total_multiplicity() + 1; }
  /// Sorted multiset of vertex depths, each repeated by multiplicity.
  std::vector<int> levels() const;
  /// Every vertex extends the root and pairwise joins are vertices.
  bool satisfies_closure() const;
};

/// How rays sharing their whole finite prefix are treated.
enum class JoinResolution {
  /// Reject as unresolved (InvalidInput).
  reject,
  /// Treat identical prefixes as splitting at their last vertex.
  collapse,
};

/// Join set of n >= 2 rays with root at the empty word. Multiplicity of a vertex
/// v is (number of child subtrees of v holding rays) - 1.
JoinSet join_set(const std::vector<Word>& rays, JoinResolution mode = JoinResolution::reject);

/// Product of phi^s(T_v) over join vertices with multiplicity; 1 for a single ray.
double multienergy_kernel(const AffineIFS& ifs, double s, const std::vector<Word>& rays,
                          JoinResolution mode = JoinResolution::reject);

/// J^s(r): words w with alpha_j(T_w) <= r < alpha_j(T_{w^-}), j = ceil(s).
/// Throws ResourceLimit when the set would exceed `max_size`.
std::vector<Word> cut_set(const AffineIFS& ifs, double s, double r,
                          std::size_t max_size = 20'000'000);

struct JoinClass {
  Word root;
  /// Canonical encoding of the join set relative to its root.
  std::string canonical_form;
  int spread = 1;
  std::vector<int> levels;

  friend bool operator==(const JoinClass&, const JoinClass&) = default;
};

/// Canonical representative under automorphisms of the subtree rooted at j.root.
JoinClass canonical_join_class(const JoinSet& j);

/// Canonical form only; used in hot enumeration loops.
std::string canonical_form(const JoinSet& j);

struct EnumerationLimits {
  int max_points = 6;
  int max_depth = 8;
};

/// Number of configurations (k_1 < ... < k_p, J_1, ..., J_p), each J_r a join
/// class with root at level k_r, whose aggregate level multiset equals `levels`.
/// `m` bounds the branching of the tree; m = 0 means unbounded.
std::uint64_t count_join_configurations(std::vector<int> levels, int m = 0,
                                        EnumerationLimits limits = {});

/// Number of join classes with root at the empty word whose levels equal `levels`.
std::uint64_t count_rooted_join_classes(std::vector<int> levels, int m = 0,
                                        EnumerationLimits limits = {});

}  // namespace qdim
