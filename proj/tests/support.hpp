#pragma once

// Helpers shared by the test binaries: small corpora and a naive referee
// written from the win conditions without sharing code with the library.

#include <cstdint>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/games.hpp"
#include "ehrlab/tree.hpp"

namespace testsupport {

using namespace ehrlab;

template <class F>
void for_each_coloured(std::size_t max_nodes, std::uint32_t r, F&& f) {
  for (const auto& shape : enumerate_shapes_up_to(max_nodes)) {
    for_each_rooted_colouring(shape, Palette(r), [&](const std::vector<Colour>& c) { f(ColouredTree{shape, c}); });
  }
}

inline std::vector<ColouredTree> coloured_corpus(std::size_t max_nodes, std::uint32_t r) {
  std::vector<ColouredTree> out;
  for_each_coloured(max_nodes, r, [&](const ColouredTree& t) { out.push_back(t); });
  return out;
}

// Distance through the lowest common ancestor, found by walking parents.
inline std::uint32_t naive_distance(const RootedTree& t, NodeId a, NodeId b) {
  std::vector<NodeId> up_a{a};
  while (auto p = t.parent(up_a.back())) up_a.push_back(*p);
  std::uint32_t steps_b = 0;
  for (NodeId cur = b;; ++steps_b) {
    for (std::uint32_t i = 0; i < up_a.size(); ++i) {
      if (up_a[i] == cur) return i + steps_b;
    }
    cur = *t.parent(cur);
  }
}

inline bool naive_is_parent(const RootedTree& t, NodeId par, NodeId child) {
  auto p = t.parent(child);
  return p.has_value() && *p == par;
}

// The win conditions over all index pairs including the root pair.
inline bool naive_referee(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs,
                          bool with_distance) {
  std::vector<NodeId> xs{0}, ys{0};
  for (auto p : pairs) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (a.colours[xs[i]] != b.colours[ys[i]]) return false;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (with_distance && naive_distance(a.tree, xs[i], xs[j]) != naive_distance(b.tree, ys[i], ys[j])) return false;
      if (naive_is_parent(a.tree, xs[i], xs[j]) != naive_is_parent(b.tree, ys[i], ys[j])) return false;
      if ((xs[i] == xs[j]) != (ys[i] == ys[j])) return false;
    }
  }
  return true;
}

// Plain game-tree search: the referee is only consulted once all rounds are
// played, and every node of either tree is a legal Spoiler move.
inline bool naive_duplicator_wins(const ColouredTree& a, const ColouredTree& b, std::vector<PebblePair> pairs,
                                  std::uint32_t rounds, bool with_distance) {
  if (rounds == 0) return naive_referee(a, b, pairs, with_distance);
  for (int side = 0; side < 2; ++side) {
    const std::size_t n = side == 0 ? a.size() : b.size();
    const std::size_t other = side == 0 ? b.size() : a.size();
    for (NodeId v = 0; v < n; ++v) {
      bool answered = false;
      for (NodeId w = 0; w < other && !answered; ++w) {
        pairs.push_back(side == 0 ? PebblePair{v, w} : PebblePair{w, v});
        answered = naive_duplicator_wins(a, b, pairs, rounds - 1, with_distance);
        pairs.pop_back();
      }
      if (!answered) return false;
    }
  }
  return true;
}

}  // namespace testsupport
