#pragma once

// Truncated node types. The depth-0 type of a node is its colour; the
// depth-j type is the colour together with, for every depth-(j-1) type, the
// number of children of that type capped at the cutoff k. Types are
// hash-consed in a TypeTable so equal types share one TypeId.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"

namespace ehrlab {

using TypeId = std::uint32_t;

struct TypeEntry {
  std::uint32_t level = 0;
  Colour colour = 0;
  /// (child type, count in 1..k), sorted by child TypeId.
  std::vector<std::pair<TypeId, std::uint32_t>> children;
  std::string canonical;
};

/// Interning table for types with one cutoff k. Interning and lookups are
/// serialized by an internal mutex; entries are never modified once added,
/// so references returned by entry() stay valid for the table's lifetime.
class TypeTable {
 public:
  explicit TypeTable(std::uint32_t k) : k_(k) {
    if (k < 1) throw InvalidArgument("type cutoff k must be >= 1");
  }
  TypeTable(const TypeTable&) = delete;
  TypeTable& operator=(const TypeTable&) = delete;

  std::uint32_t cutoff() const noexcept { return k_; }

  TypeId intern(std::uint32_t level, Colour colour, std::vector<std::pair<TypeId, std::uint32_t>> children) {
    std::sort(children.begin(), children.end());
    std::lock_guard lock(mu_);
    Key key{level, colour, children};
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    if (level == 0 && !children.empty()) throw InvalidArgument("depth-0 types have no children");
    TypeEntry e;
    e.level = level;
    e.colour = colour;
    e.children = std::move(children);
    e.canonical = render(e);
    const auto id = static_cast<TypeId>(entries_.size());
    entries_.push_back(std::move(e));
    index_.emplace(std::move(key), id);
    return id;
  }

  const TypeEntry& entry(TypeId id) const {
    std::lock_guard lock(mu_);
    if (id >= entries_.size()) throw InvalidArgument("unknown type id " + std::to_string(id));
    return entries_[id];
  }

  const std::string& canonical(TypeId id) const { return entry(id).canonical; }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  /// The depth-(j-1) type determined by a depth-j type (j >= 1).
  TypeId project(TypeId id) {
    {
      std::lock_guard lock(mu_);
      if (auto it = projections_.find(id); it != projections_.end()) return it->second;
    }
    const TypeEntry e = entry(id);
    if (e.level == 0) throw InvalidArgument("cannot project a depth-0 type");
    TypeId result;
    if (e.level == 1) {
      result = intern(0, e.colour, {});
    } else {
      std::map<TypeId, std::uint32_t> merged;
      for (auto [child, count] : e.children) {
        auto& slot = merged[project(child)];
        slot = std::min(k_, slot + count);
      }
      result = intern(e.level - 1, e.colour, {merged.begin(), merged.end()});
    }
    std::lock_guard lock(mu_);
    projections_.emplace(id, result);
    return result;
  }

 private:
  struct Key {
    std::uint32_t level;
    Colour colour;
    std::vector<std::pair<TypeId, std::uint32_t>> children;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(k.level) << 32) | k.colour);
      for (auto [t, n] : k.children) {
        h ^= std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(t) << 32) | n) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return h;
    }
  };

  std::string render(const TypeEntry& e) const {
    std::string out = "c" + std::to_string(e.colour);
    if (e.level == 0) return out;
    std::vector<std::string> parts;
    for (auto [child, count] : e.children) parts.push_back(entries_[child].canonical + "*" + std::to_string(count));
    std::sort(parts.begin(), parts.end());
    out += '[';
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ',';
      out += parts[i];
    }
    out += ']';
    return out;
  }

  std::uint32_t k_;
  mutable std::mutex mu_;
  std::deque<TypeEntry> entries_;
  std::unordered_map<Key, TypeId, KeyHash> index_;
  std::unordered_map<TypeId, TypeId> projections_;
};

/// Types of every arena node, plus the types along a lasso tail: the tail
/// node at distance j >= 1 below the attach leaf has tail[(j - 1) % size].
struct TypeAssignment {
  std::uint32_t depth = 0;
  std::vector<TypeId> nodes;
  std::vector<TypeId> tail;
};

namespace detail {

/// Types at depth m of a finite tree.
inline std::vector<TypeId> finite_types(const ColouredTree& t, std::uint32_t m, TypeTable& table) {
  const std::size_t n = t.size();
  std::vector<TypeId> cur(n);
  for (NodeId v = 0; v < n; ++v) cur[v] = table.intern(0, t.colours[v], {});
  std::vector<TypeId> next(n);
  std::vector<TypeId> scratch;
  for (std::uint32_t level = 1; level <= m; ++level) {
    for (NodeId v = 0; v < n; ++v) {
      scratch.clear();
      for (NodeId c : t.tree.children(v)) scratch.push_back(cur[c]);
      std::sort(scratch.begin(), scratch.end());
      std::vector<std::pair<TypeId, std::uint32_t>> counts;
      for (std::size_t i = 0; i < scratch.size();) {
        std::size_t j = i;
        while (j < scratch.size() && scratch[j] == scratch[i]) ++j;
        counts.emplace_back(scratch[i], std::min<std::uint32_t>(static_cast<std::uint32_t>(j - i), table.cutoff()));
        i = j;
      }
      next[v] = table.intern(level, t.colours[v], std::move(counts));
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace detail

/// (Sigma, m, k)-types of all nodes; k is the table's cutoff. Lasso tails
/// are unrolled m + 2*period levels and the tail types are checked to repeat
/// with the colour period.
inline TypeAssignment compute_types(const ColouredTree& t, std::uint32_t m, TypeTable& table) {
  TypeAssignment out;
  out.depth = m;
  if (!t.tree.infinite()) {
    out.nodes = detail::finite_types(t, m, table);
    return out;
  }
  const Lasso& lasso = *t.tree.lasso();
  const std::size_t period = lasso.period();
  const std::uint32_t attach_depth = t.tree.depth(lasso.attach_leaf);
  const std::uint32_t horizon = std::max<std::uint32_t>(t.tree.height(), attach_depth + m + 2 * static_cast<std::uint32_t>(period));
  const Extracted unrolled = extract(t, t.root(), horizon);
  const std::vector<TypeId> types = detail::finite_types(unrolled.tree, m, table);
  out.nodes.assign(t.size(), 0);
  NodeId attach_new = kNoNode;
  for (NodeId i = 0; i < unrolled.origin.size(); ++i) {
    if (unrolled.origin[i] == kNoNode) continue;
    out.nodes[unrolled.origin[i]] = types[i];
    if (unrolled.origin[i] == lasso.attach_leaf) attach_new = i;
  }
  std::vector<TypeId> path;
  NodeId cur = attach_new;
  for (std::size_t j = 1; j <= 2 * period; ++j) {
    cur = unrolled.tree.tree.children(cur).front();
    path.push_back(types[cur]);
  }
  for (std::size_t j = 0; j < period; ++j) {
    if (path[j] != path[j + period]) throw InvariantViolation("lasso tail types are not periodic");
  }
  path.resize(period);
  out.tail = std::move(path);
  return out;
}

/// Saturating counts of realized types.
struct TypeCensus {
  std::uint32_t cap = 1;
  std::map<TypeId, std::uint32_t> counts;

  std::uint32_t count(TypeId t) const {
    auto it = counts.find(t);
    return it == counts.end() ? 0 : it->second;
  }
  void add(TypeId t, std::uint32_t n = 1) {
    auto& slot = counts[t];
    slot = static_cast<std::uint32_t>(std::min<std::uint64_t>(cap, static_cast<std::uint64_t>(slot) + n));
  }
  bool operator==(const TypeCensus&) const = default;
};

/// Census of an assignment; every tail type occurs infinitely often and so
/// counts as `cap`.
inline TypeCensus census_of(const TypeAssignment& a, std::uint32_t cap) {
  if (cap < 1) throw InvalidArgument("census cap must be >= 1");
  TypeCensus c;
  c.cap = cap;
  for (TypeId t : a.nodes) c.add(t);
  for (TypeId t : a.tail) c.add(t, cap);
  return c;
}

inline TypeCensus census(const ColouredTree& t, std::uint32_t m, std::uint32_t cap, TypeTable& table) {
  return census_of(compute_types(t, m, table), cap);
}

/// "typeCanonicalString count" lines sorted by the canonical string.
inline void dump_census(std::ostream& os, const TypeCensus& c, const TypeTable& table) {
  std::vector<std::pair<std::string, std::uint32_t>> rows;
  for (auto [t, n] : c.counts) rows.emplace_back(table.canonical(t), n);
  std::sort(rows.begin(), rows.end());
  for (const auto& [s, n] : rows) os << s << ' ' << n << '\n';
}

/// Whether u in A and v in B have the same (Sigma, m, k)-type.
inline bool types_equal_nodes(const ColouredTree& a, NodeId u, const ColouredTree& b, NodeId v, std::uint32_t m,
                              std::uint32_t k) {
  TypeTable table(k);
  const auto ta = compute_types(a, m, table);
  const auto tb = compute_types(b, m, table);
  if (u >= ta.nodes.size() || v >= tb.nodes.size()) throw InvalidArgument("invalid node id");
  return ta.nodes[u] == tb.nodes[v];
}

}  // namespace ehrlab
