// Enumeration of join-class shapes by level multiset.
//
// A join class with root at level k is determined by its shape: a top vertex
// at the smallest level t >= k carrying every occurrence of t as multiplicity,
// with the deeper levels partitioned among distinct child subtrees of the top
// vertex. A shape arises from rays iff each vertex of multiplicity mu has at
// most mu + 1 occupied child branches (and mu + 1 <= m in an m-ary tree).
// Encodings match canonical_form() so the two can be cross-checked.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qdim/codespace.hpp"
#include "qdim/error.hpp"

namespace qdim {
namespace {

using Levels = std::vector<int>;
using ShapeSet = std::set<std::string>;

class ShapeGenerator {
 public:
  explicit ShapeGenerator(int m) : m_(m) {}

  /// Shapes with root at `root_level` whose level multiset is `levels` (sorted, nonempty).
  const ShapeSet& shapes(const Levels& levels, int root_level) {
    const auto key = std::make_pair(levels, root_level);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    ShapeSet result;
    const int top = levels.front();
    const int mult = static_cast<int>(std::count(levels.begin(), levels.end(), top));
    if (m_ == 0 || mult + 1 <= m_) {
      const Levels rest(levels.begin() + mult, levels.end());
      for (const auto& kids : child_combinations(rest, top + 1, mult + 1)) {
        std::string node = "(" + std::to_string(mult) + ":";
        for (const auto& k : kids) node += k;
        node += ")";
        for (int l = top; l > root_level; --l) node = "(0:" + node + ")";
        result.insert(std::move(node));
      }
    }
    return memo_.emplace(key, std::move(result)).first->second;
  }

 private:
  // Every way to split `rest` into at most `max_groups` unordered groups, each
  // realised by a shape rooted at `child_level`; returns sorted child lists.
  std::set<std::vector<std::string>> child_combinations(const Levels& rest, int child_level, int max_groups) {
    std::set<std::vector<std::string>> out;
    if (rest.empty()) {
      out.insert(std::vector<std::string>{});
      return out;
    }
    std::vector<int> assign(rest.size(), 0);
    std::set<std::vector<Levels>> partitions;
    // Restricted growth strings enumerate set partitions of the positions.
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int used) {
      if (pos == rest.size()) {
        std::vector<Levels> groups(static_cast<std::size_t>(used));
        for (std::size_t i = 0; i < rest.size(); ++i) groups[static_cast<std::size_t>(assign[i])].push_back(rest[i]);
        for (auto& g : groups) std::sort(g.begin(), g.end());
        std::sort(groups.begin(), groups.end());
        partitions.insert(std::move(groups));
        return;
      }
      for (int g = 0; g <= used && g < max_groups; ++g) {
        assign[pos] = g;
        rec(pos + 1, std::max(used, g + 1));
      }
    };
    rec(0, 0);
    for (const auto& groups : partitions) {
      std::vector<std::vector<std::string>> partial{{}};
      for (const auto& g : groups) {
        std::vector<std::vector<std::string>> next;
        for (const auto& s : shapes(g, child_level)) {
          for (const auto& p : partial) {
            auto q = p;
            q.push_back(s);
            next.push_back(std::move(q));
          }
        }
        partial = std::move(next);
      }
      for (auto& p : partial) {
        std::sort(p.begin(), p.end());
        out.insert(std::move(p));
      }
    }
    return out;
  }

  int m_;
  std::map<std::pair<Levels, int>, ShapeSet> memo_;
};

void check_limits(const Levels& levels, const EnumerationLimits& limits) {
  if (levels.empty()) throw InvalidInput("level multiset must be nonempty");
  if (static_cast<int>(levels.size()) > limits.max_points) {
    throw ResourceLimit("level multiset larger than the enumeration limit " + std::to_string(limits.max_points));
  }
  for (int l : levels) {
    if (l < 0) throw InvalidInput("levels must be nonnegative");
    if (l > limits.max_depth) {
      throw ResourceLimit("level " + std::to_string(l) + " deeper than the enumeration limit " +
                          std::to_string(limits.max_depth));
    }
  }
}

}  // namespace

std::uint64_t count_rooted_join_classes(std::vector<int> levels, int m, EnumerationLimits limits) {
  check_limits(levels, limits);
  std::sort(levels.begin(), levels.end());
  ShapeGenerator gen(m);
  return gen.shapes(levels, 0).size();
}

std::uint64_t count_join_configurations(std::vector<int> levels, int m, EnumerationLimits limits) {
  check_limits(levels, limits);
  std::sort(levels.begin(), levels.end());
  ShapeGenerator gen(m);

  std::vector<int> distinct = levels;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::uint64_t total = 0;
  const std::size_t nd = distinct.size();
  // Choose the branch levels k_1 < ... < k_p among the distinct levels.
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << nd); ++mask) {
    std::vector<int> ks;
    Levels rest = levels;
    for (std::size_t b = 0; b < nd; ++b) {
      if (mask & (std::uint64_t{1} << b)) {
        ks.push_back(distinct[b]);
        rest.erase(std::find(rest.begin(), rest.end(), distinct[b]));
      }
    }
    const std::size_t p = ks.size();
    // Distribute the remaining levels among the p classes; class r only takes
    // levels >= k_r.
    std::set<std::vector<Levels>> distributions;
    std::vector<Levels> bins(p);
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
      if (pos == rest.size()) {
        auto d = bins;
        for (auto& b : d) std::sort(b.begin(), b.end());
        distributions.insert(std::move(d));
        return;
      }
      for (std::size_t r = 0; r < p; ++r) {
        if (rest[pos] < ks[r]) continue;
        bins[r].push_back(rest[pos]);
        rec(pos + 1);
        bins[r].pop_back();
      }
    };
    rec(0);
    for (const auto& d : distributions) {
      std::uint64_t ways = 1;
      for (std::size_t r = 0; r < p && ways; ++r) {
        if (d[r].empty()) continue;  // spread-1 class
        std::uint64_t count = 0;
        for (const auto& shape : gen.shapes(d[r], ks[r])) {
          // With a bounded tree, a class whose top vertex is its root shares
          // that vertex with the branch carrying the distinguished ray.
          if (m != 0 && d[r].front() == ks[r]) {
            const int mult = static_cast<int>(std::count(d[r].begin(), d[r].end(), ks[r]));
            if (mult + 2 > m) continue;
          }
          (void)shape;
          ++count;
        }
        ways *= count;
      }
      total += ways;
    }
  }
  return total;
}

}  // namespace qdim
