#pragma once

// Rooted trees stored as an arena of nodes, with an optional "lasso": one
// eventually periodic infinite path hanging below a designated leaf. This is
// the only kind of infinite tree the library handles.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ehrlab/errors.hpp"

namespace ehrlab {

using NodeId = std::uint32_t;
using Colour = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct NodeRecord {
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  std::uint32_t depth = 0;
};

/// Infinite path below `attach_leaf`. The path node at distance j >= 1 from
/// the attach leaf carries period_colours[(j - 1) % period].
struct Lasso {
  NodeId attach_leaf = 0;
  std::vector<Colour> period_colours;

  std::size_t period() const noexcept { return period_colours.size(); }
  Colour colour_at(std::size_t j) const { return period_colours[(j - 1) % period_colours.size()]; }
  bool operator==(const Lasso&) const = default;
};

class RootedTree {
 public:
  RootedTree() : nodes_(1) {}

  NodeId root() const noexcept { return 0; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool valid(NodeId v) const noexcept { return v < nodes_.size(); }

  NodeId add_child(NodeId parent) {
    check(parent);
    if (lasso_ && lasso_->attach_leaf == parent) {
      throw InvalidArgument("cannot add a child below the lasso attach leaf");
    }
    const auto id = static_cast<NodeId>(nodes_.size());
    NodeRecord rec;
    rec.parent = parent;
    rec.depth = nodes_[parent].depth + 1;
    nodes_.push_back(std::move(rec));
    nodes_[parent].children.push_back(id);
    return id;
  }

  const NodeRecord& node(NodeId v) const {
    check(v);
    return nodes_[v];
  }
  std::span<const NodeId> children(NodeId v) const { return node(v).children; }
  std::optional<NodeId> parent(NodeId v) const { return node(v).parent; }
  std::uint32_t depth(NodeId v) const { return node(v).depth; }
  bool is_leaf(NodeId v) const { return node(v).children.empty(); }

  const std::optional<Lasso>& lasso() const noexcept { return lasso_; }
  bool infinite() const noexcept { return lasso_.has_value(); }

  void set_lasso(Lasso lasso) {
    check(lasso.attach_leaf);
    if (!nodes_[lasso.attach_leaf].children.empty()) {
      throw InvalidArgument("lasso must hang from a leaf");
    }
    if (lasso.period_colours.empty()) throw InvalidArgument("lasso period must be non-empty");
    lasso_ = std::move(lasso);
  }
  void clear_lasso() noexcept { lasso_.reset(); }

  std::uint32_t height() const {
    std::uint32_t h = 0;
    for (const auto& n : nodes_) h = std::max(h, n.depth);
    return h;
  }

  std::vector<NodeId> preorder() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    std::vector<NodeId> stack{root()};
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      out.push_back(v);
      const auto& ch = nodes_[v].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return out;
  }

  std::vector<NodeId> bfs_order() const {
    std::vector<NodeId> out{root()};
    out.reserve(nodes_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (NodeId c : nodes_[out[i]].children) out.push_back(c);
    }
    return out;
  }

  /// True iff `a` is `d` or an ancestor of `d`.
  bool is_ancestor(NodeId a, NodeId d) const {
    check(a);
    check(d);
    while (nodes_[d].depth > nodes_[a].depth) d = *nodes_[d].parent;
    return a == d;
  }

  /// The ancestor of v that is `dist` edges above it.
  NodeId ancestor(NodeId v, std::uint32_t dist) const {
    check(v);
    if (dist > nodes_[v].depth) throw InvalidArgument("ancestor distance exceeds depth");
    for (std::uint32_t i = 0; i < dist; ++i) v = *nodes_[v].parent;
    return v;
  }

  NodeId lca(NodeId a, NodeId b) const {
    check(a);
    check(b);
    while (nodes_[a].depth > nodes_[b].depth) a = *nodes_[a].parent;
    while (nodes_[b].depth > nodes_[a].depth) b = *nodes_[b].parent;
    while (a != b) {
      a = *nodes_[a].parent;
      b = *nodes_[b].parent;
    }
    return a;
  }

 private:
  void check(NodeId v) const {
    if (v >= nodes_.size()) throw InvalidArgument("invalid node id " + std::to_string(v));
  }

  std::vector<NodeRecord> nodes_;
  std::optional<Lasso> lasso_;
};

/// Graph distance: d(a) + d(b) - 2 d(lca(a, b)).
inline std::uint32_t distance(const RootedTree& t, NodeId a, NodeId b) {
  const NodeId l = t.lca(a, b);
  return t.depth(a) + t.depth(b) - 2 * t.depth(l);
}

/// A tree together with one colour per arena node. Lasso tail colours live
/// in the tree's Lasso record.
struct ColouredTree {
  RootedTree tree;
  std::vector<Colour> colours{0};

  static ColouredTree single(Colour c) {
    ColouredTree t;
    t.colours[0] = c;
    return t;
  }

  std::size_t size() const noexcept { return tree.size(); }
  NodeId root() const noexcept { return tree.root(); }
  Colour colour(NodeId v) const {
    if (v >= colours.size()) throw InvalidArgument("invalid node id " + std::to_string(v));
    return colours[v];
  }
  NodeId add_child(NodeId parent, Colour c) {
    const NodeId id = tree.add_child(parent);
    colours.push_back(c);
    return id;
  }
};

/// Result of cutting a subtree out of a tree. `origin[i]` is the original
/// arena id of new node i, or kNoNode for nodes unrolled from a lasso tail.
struct Extracted {
  ColouredTree tree;
  std::vector<NodeId> origin;

  /// New id of an original node, if it was kept.
  std::optional<NodeId> find(NodeId original) const {
    for (std::size_t i = 0; i < origin.size(); ++i) {
      if (origin[i] == original) return static_cast<NodeId>(i);
    }
    return std::nullopt;
  }
};

/// Subtree rooted at `v`, keeping nodes within `max_depth` of `v` when a
/// bound is given. A lasso inside the subtree is kept as a lasso when no
/// bound is given and unrolled into concrete nodes otherwise. New ids follow
/// breadth-first order from `v`.
inline Extracted extract(const ColouredTree& t, NodeId v, std::optional<std::uint32_t> max_depth) {
  const RootedTree& src = t.tree;
  if (!src.valid(v)) throw InvalidArgument("invalid node id " + std::to_string(v));
  Extracted out;
  out.origin.push_back(v);
  out.tree.colours[0] = t.colours[v];
  const std::uint32_t base = src.depth(v);
  std::optional<NodeId> new_attach;
  for (std::size_t i = 0; i < out.origin.size(); ++i) {
    const NodeId old = out.origin[i];
    const NodeId cur = static_cast<NodeId>(i);
    if (src.lasso() && src.lasso()->attach_leaf == old) new_attach = cur;
    if (max_depth && src.depth(old) - base >= *max_depth) continue;
    for (NodeId c : src.children(old)) {
      out.tree.add_child(cur, t.colours[c]);
      out.origin.push_back(c);
    }
  }
  if (new_attach) {
    const Lasso& lasso = *src.lasso();
    if (!max_depth) {
      out.tree.tree.set_lasso(Lasso{*new_attach, lasso.period_colours});
    } else {
      NodeId cur = *new_attach;
      std::uint32_t d = src.depth(lasso.attach_leaf) - base;
      for (std::size_t j = 1; d + 1 <= *max_depth; ++j, ++d) {
        cur = out.tree.add_child(cur, lasso.colour_at(j));
        out.origin.push_back(kNoNode);
      }
    }
  }
  return out;
}

/// T|_n: all nodes of depth at most n, lasso unrolled.
inline ColouredTree truncate(const ColouredTree& t, std::uint32_t n) {
  return extract(t, t.root(), n).tree;
}

/// T(v), lasso preserved when it lies inside.
inline ColouredTree subtree_at(const ColouredTree& t, NodeId v) {
  return extract(t, v, std::nullopt).tree;
}

// ---------------------------------------------------------------------------
// Enumeration of unlabelled rooted trees, one representative per
// isomorphism class, generated in canonical order (children sorted by
// non-increasing shape index).

namespace detail {

class ShapeCatalogue {
 public:
  const std::vector<std::size_t>& of_size(std::size_t n) {
    while (by_size_.size() <= n) grow();
    return by_size_[n];
  }

  RootedTree build(std::size_t shape) const {
    RootedTree t;
    std::function<void(NodeId, std::size_t)> rec = [&](NodeId at, std::size_t s) {
      for (std::size_t c : shapes_[s]) rec(t.add_child(at), c);
    };
    rec(t.root(), shape);
    return t;
  }

 private:
  void grow() {
    const std::size_t n = by_size_.size();
    by_size_.emplace_back();
    if (n == 0) return;
    std::vector<std::size_t> children;
    // Children listed in non-increasing shape index; shape indices are
    // assigned in order of increasing size, so this is a canonical multiset.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t remaining, std::size_t max_index) {
      if (remaining == 0) {
        by_size_[n].push_back(shapes_.size() + pending_.size());
        pending_.push_back(children);
        return;
      }
      for (std::size_t idx = std::min(max_index + 1, shapes_.size()); idx-- > 0;) {
        if (sizes_[idx] > remaining) continue;
        children.push_back(idx);
        rec(remaining - sizes_[idx], idx);
        children.pop_back();
      }
    };
    rec(n - 1, shapes_.empty() ? 0 : shapes_.size() - 1);
    for (auto& p : pending_) {
      shapes_.push_back(std::move(p));
      sizes_.push_back(n);
    }
    pending_.clear();
  }

  std::vector<std::vector<std::size_t>> shapes_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<std::size_t>> by_size_;
  std::vector<std::vector<std::size_t>> pending_;
};

}  // namespace detail

/// All unlabelled rooted trees with exactly n nodes (n >= 1).
inline std::vector<RootedTree> enumerate_shapes(std::size_t n) {
  detail::ShapeCatalogue cat;
  std::vector<RootedTree> out;
  if (n == 0) return out;
  for (std::size_t s : cat.of_size(n)) out.push_back(cat.build(s));
  return out;
}

/// All unlabelled rooted trees with 1..max_nodes nodes, smallest first.
inline std::vector<RootedTree> enumerate_shapes_up_to(std::size_t max_nodes) {
  detail::ShapeCatalogue cat;
  std::vector<RootedTree> out;
  for (std::size_t n = 1; n <= max_nodes; ++n) {
    for (std::size_t s : cat.of_size(n)) out.push_back(cat.build(s));
  }
  return out;
}

}  // namespace ehrlab
