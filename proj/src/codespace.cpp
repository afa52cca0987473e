#include "qdim/codespace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "qdim/error.hpp"
#include "qdim/linalg.hpp"

namespace qdim {

Word::Word(std::initializer_list<int> symbols) {
  s_.reserve(symbols.size());
  for (int v : symbols) {
    if (v < 0 || v > 254) throw InvalidInput("word symbol out of range");
    s_.push_back(static_cast<Symbol>(v));
  }
}

Word Word::prefix(std::size_t k) const {
  if (k > s_.size()) throw InvalidInput("prefix longer than word");
  return Word(std::vector<Symbol>(s_.begin(), s_.begin() + static_cast<std::ptrdiff_t>(k)));
}

Word Word::child(Symbol c) const {
  Word w = *this;
  w.s_.push_back(c);
  return w;
}

bool Word::is_prefix_of(const Word& other) const noexcept {
  return s_.size() <= other.s_.size() && std::equal(s_.begin(), s_.end(), other.s_.begin());
}

Word Word::from_index(std::uint64_t index, int depth, int m) {
  std::vector<Symbol> s(static_cast<std::size_t>(depth));
  for (int i = depth - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = static_cast<Symbol>(index % static_cast<std::uint64_t>(m));
    index /= static_cast<std::uint64_t>(m);
  }
  return Word(std::move(s));
}

std::uint64_t Word::index(int m) const noexcept {
  std::uint64_t idx = 0;
  for (Symbol c : s_) idx = idx * static_cast<std::uint64_t>(m) + c;
  return idx;
}

std::string Word::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s_[i] + 1);
  }
  return out + ")";
}

Word wedge(const Word& a, const Word& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t k = 0;
  while (k < n && a[k] == b[k]) ++k;
  return a.prefix(k);
}

int JoinSet::total_multiplicity() const noexcept {
  int t = 0;
  for (const auto& v : vertices) t += v.multiplicity;
  return t;
}

std::vector<int> JoinSet::levels() const {
  std::vector<int> out;
  for (const auto& v : vertices)
    for (int i = 0; i < v.multiplicity; ++i) out.push_back(static_cast<int>(v.vertex.size()));
  std::sort(out.begin(), out.end());
  return out;
}

bool JoinSet::satisfies_closure() const {
  for (const auto& a : vertices) {
    if (!root.is_prefix_of(a.vertex) || a.multiplicity < 1) return false;
    for (const auto& b : vertices) {
      const Word j = wedge(a.vertex, b.vertex);
      const bool present = std::any_of(vertices.begin(), vertices.end(),
                                       [&](const JoinVertex& v) { return v.vertex == j; });
      if (!present) return false;
    }
  }
  return true;
}

namespace {

void split_rays(const std::vector<Word>& rays, const std::vector<std::size_t>& group, std::size_t depth,
                JoinResolution mode, std::map<Word, int>& out) {
  if (group.size() < 2) return;
  std::size_t d = depth;
  for (;;) {
    std::map<int, std::vector<std::size_t>> parts;
    int singletons = 0;
    for (std::size_t idx : group) {
      const Word& w = rays[idx];
      if (w.size() == d) {
        if (mode == JoinResolution::reject) {
          throw InvalidInput("join_set: ray " + w.to_string() + " is not resolved against the other rays");
        }
        ++singletons;
        continue;
      }
      parts[w[d]].push_back(idx);
    }
    const int branches = static_cast<int>(parts.size()) + singletons;
    if (branches == 1) {
      ++d;
      continue;
    }
    out[rays[group.front()].prefix(d)] += branches - 1;
    for (const auto& [sym, members] : parts) split_rays(rays, members, d + 1, mode, out);
    return;
  }
}

}  // namespace

JoinSet join_set(const std::vector<Word>& rays, JoinResolution mode) {
  if (rays.size() < 2) throw InvalidInput("join_set needs at least two rays");
  std::vector<std::size_t> all(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) all[i] = i;
  std::map<Word, int> mult;
  split_rays(rays, all, 0, mode, mult);
  JoinSet j;
  for (auto& [w, k] : mult) j.vertices.push_back({w, k});
  return j;
}

double multienergy_kernel(const AffineIFS& ifs, double s, const std::vector<Word>& rays, JoinResolution mode) {
  if (!(s > 0.0)) throw InvalidInput("multienergy_kernel: s must be positive");
  if (rays.empty()) throw InvalidInput("multienergy_kernel: no rays");
  if (rays.size() == 1) return 1.0;
  const JoinSet j = join_set(rays, mode);
  double log_k = 0.0;
  for (const auto& v : j.vertices) {
    if (v.vertex.empty()) continue;  // phi^s(identity) = 1
    log_k += v.multiplicity * log_phi_s(singular_values(compose(ifs, v.vertex)), s);
  }
  return std::exp(log_k);
}

namespace {

void cut_dfs(const AffineIFS& ifs, int j, double r, Word& w, const Matrix& t, std::vector<Word>& out,
             std::size_t max_size) {
  for (int c = 0; c < ifs.size(); ++c) {
    const Matrix tc = t * ifs.map(c).matrix();
    w.push_back(static_cast<Symbol>(c));
    const SingularValues sv = singular_values(tc);
    if (sv[j - 1] <= r) {
      if (out.size() >= max_size) throw ResourceLimit("cut_set exceeds " + std::to_string(max_size) + " words");
      out.push_back(w);
    } else {
      cut_dfs(ifs, j, r, w, tc, out, max_size);
    }
    w = w.prefix(w.size() - 1);
  }
}

}  // namespace

std::vector<Word> cut_set(const AffineIFS& ifs, double s, double r, std::size_t max_size) {
  if (!(s > 0.0) || s > ifs.dim()) throw InvalidInput("cut_set: s must lie in (0, N]");
  if (!(r > 0.0) || !(r < 1.0)) throw InvalidInput("cut_set: r must lie in (0, 1)");
  const int j = phi_index(s, ifs.dim());
  std::vector<Word> out;
  Word w;
  cut_dfs(ifs, j, r, w, Matrix::identity(ifs.dim()), out, max_size);
  return out;
}

namespace {

struct Entry {
  const Word* word;
  int mult;
};

// AHU-style encoding: "(mult:child child ...)" with children sorted.
std::string encode(const std::vector<Entry>& entries, std::size_t depth) {
  int here = 0;
  std::map<Symbol, std::vector<Entry>> kids;
  for (const auto& e : entries) {
    if (e.word->size() == depth) {
      here += e.mult;
    } else {
      kids[(*e.word)[depth]].push_back(e);
    }
  }
  std::vector<std::string> parts;
  parts.reserve(kids.size());
  for (const auto& [sym, sub] : kids) parts.push_back(encode(sub, depth + 1));
  std::sort(parts.begin(), parts.end());
  std::string out = "(" + std::to_string(here) + ":";
  for (const auto& p : parts) out += p;
  return out + ")";
}

}  // namespace

std::string canonical_form(const JoinSet& j) {
  std::vector<Entry> entries;
  entries.reserve(j.vertices.size());
  for (const auto& v : j.vertices) {
    if (!j.root.is_prefix_of(v.vertex)) {
      throw InvalidInput("join set vertex " + v.vertex.to_string() + " does not extend root " + j.root.to_string());
    }
    entries.push_back({&v.vertex, v.multiplicity});
  }
  return encode(entries, j.root.size());
}

JoinClass canonical_join_class(const JoinSet& j) {
  JoinClass c;
  c.root = j.root;
  c.canonical_form = canonical_form(j);
  c.spread = j.spread();
  c.levels = j.levels();
  return c;
}

}  // namespace qdim
