#pragma once

// Referees and exact solvers for the pebble games on coloured trees: the
// set-pebble Ehrenfeucht game (EHR), its distance-preserving variant (DEHR)
// and the one-round types game.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

enum class Player { Spoiler, Duplicator };

inline const char* to_string(Player p) { return p == Player::Spoiler ? "Spoiler" : "Duplicator"; }

struct Verdict {
  Player winner = Player::Duplicator;
  std::vector<std::string> witness;

  bool duplicator_wins() const noexcept { return winner == Player::Duplicator; }
};

/// x in the first tree, y in the second.
struct PebblePair {
  NodeId x = 0;
  NodeId y = 0;
  bool operator==(const PebblePair&) const = default;
  auto operator<=>(const PebblePair&) const = default;
};

enum class Rules { Ehr, Dehr };

enum class Side { First, Second };

// ---------------------------------------------------------------------------
// Referees. Both add the convention pair (root, root) in front of the given
// pairs and test every ordered pair of indices.

namespace detail {

inline void require_finite_pair(const ColouredTree& a, const ColouredTree& b) {
  if (a.tree.infinite() || b.tree.infinite()) throw InvalidArgument("pebble games need finite trees");
}

inline std::string referee_violation(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs,
                                     bool with_distance) {
  std::vector<PebblePair> all{{a.root(), b.root()}};
  all.insert(all.end(), pairs.begin(), pairs.end());
  for (const auto& p : all) {
    if (!a.tree.valid(p.x) || !b.tree.valid(p.y)) throw InvalidArgument("pebble on an invalid node id");
  }
  const auto parent_is = [](const RootedTree& t, NodeId child, NodeId par) {
    const auto p = t.parent(child);
    return p && *p == par;
  };
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      const auto [xi, yi] = all[i];
      const auto [xj, yj] = all[j];
      const std::string tag = " for pairs " + std::to_string(i) + "," + std::to_string(j);
      if (with_distance && distance(a.tree, xi, xj) != distance(b.tree, yi, yj)) return "distance differs" + tag;
      if (parent_is(a.tree, xj, xi) != parent_is(b.tree, yj, yi)) return "parent relation differs" + tag;
      if (a.colour(xi) != b.colour(yi)) return "colour differs" + tag;
      if ((xi == xj) != (yi == yj)) return "equality differs" + tag;
    }
  }
  return {};
}

}  // namespace detail

/// First failed win condition of the distance-preserving game, or "".
inline std::string dehr_violation(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs) {
  return detail::referee_violation(a, b, pairs, true);
}
inline bool dehr_check(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs) {
  return dehr_violation(a, b, pairs).empty();
}

/// First failed win condition of the pebble phase of the set-pebble game.
inline std::string ehr_violation(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs) {
  return detail::referee_violation(a, b, pairs, false);
}
inline bool ehr_check(const ColouredTree& a, const ColouredTree& b, const std::vector<PebblePair>& pairs) {
  return ehr_violation(a, b, pairs).empty();
}

// ---------------------------------------------------------------------------
// Exact solver.

struct SolverLimits {
  std::uint64_t max_node_product = 1u << 20;  ///< |V1| * |V2|
  std::uint64_t max_positions = 4'000'000;    ///< memo entries
};

/// Memoized minimax for the pebble phase on two finite coloured trees.
/// A position is the multiset of pairs played so far plus the number of
/// rounds left. Not thread-safe; use one solver per thread.
class PebbleSolver {
 public:
  PebbleSolver(const ColouredTree& a, const ColouredTree& b, Rules rules, SolverLimits limits = {})
      : a_(a), b_(b), rules_(rules), limits_(limits) {
    detail::require_finite_pair(a, b);
    if (static_cast<std::uint64_t>(a.size()) * b.size() > limits.max_node_product) {
      throw GuardExceeded("pebble solver: node product " + std::to_string(a.size()) + "x" + std::to_string(b.size()) +
                          " exceeds " + std::to_string(limits.max_node_product));
    }
    dist_a_ = all_distances(a.tree);
    dist_b_ = all_distances(b.tree);
  }

  const ColouredTree& first() const noexcept { return a_; }
  const ColouredTree& second() const noexcept { return b_; }
  Rules rules() const noexcept { return rules_; }

  /// Whether the pairs are consistent with each other and with the root pair.
  bool consistent(const std::vector<PebblePair>& pairs) const {
    if (a_.colours[a_.root()] != b_.colours[b_.root()]) return false;
    std::vector<PebblePair> seen;
    for (const auto& p : pairs) {
      if (!fits(seen, p)) return false;
      seen.push_back(p);
    }
    return true;
  }

  /// Whether `p` can be added to the (consistent) pairs without violating a
  /// condition.
  bool fits(const std::vector<PebblePair>& pairs, PebblePair p) const {
    check(p);
    if (a_.colours[p.x] != b_.colours[p.y]) return false;
    if (!compatible(PebblePair{a_.root(), b_.root()}, p)) return false;
    for (const auto& q : pairs) {
      if (!compatible(q, p)) return false;
    }
    return true;
  }

  /// Duplicator wins with `rounds` further rounds from the given pairs.
  bool duplicator_wins(const std::vector<PebblePair>& pairs, std::uint32_t rounds) {
    if (!consistent(pairs)) return false;
    return solve(pairs, rounds);
  }

  /// Replies to Spoiler's move after which Duplicator still wins with
  /// `rounds - 1` further rounds (`rounds` counts Spoiler's move).
  std::vector<NodeId> winning_replies(const std::vector<PebblePair>& pairs, std::uint32_t rounds, Side side,
                                      NodeId node) {
    if (rounds == 0) throw InvalidArgument("no rounds left");
    std::vector<NodeId> out;
    const std::size_t other = side == Side::First ? b_.size() : a_.size();
    for (NodeId w = 0; w < other; ++w) {
      const PebblePair p = side == Side::First ? PebblePair{node, w} : PebblePair{w, node};
      if (!fits(pairs, p)) continue;
      auto next = pairs;
      next.push_back(p);
      if (solve(next, rounds - 1)) out.push_back(w);
    }
    return out;
  }

  /// A Spoiler move that wins, if Duplicator loses the position.
  std::optional<std::pair<Side, NodeId>> spoiler_winning_move(const std::vector<PebblePair>& pairs,
                                                              std::uint32_t rounds) {
    if (rounds == 0 || !consistent(pairs)) return std::nullopt;
    for (Side side : {Side::First, Side::Second}) {
      const std::size_t n = side == Side::First ? a_.size() : b_.size();
      for (NodeId v = 0; v < n; ++v) {
        if (winning_replies(pairs, rounds, side, v).empty()) return std::make_pair(side, v);
      }
    }
    return std::nullopt;
  }

  /// Full verdict from the given designated pairs, with a principal
  /// variation as witness when Spoiler wins.
  Verdict verdict(const std::vector<PebblePair>& pairs, std::uint32_t rounds) {
    Verdict out;
    if (!consistent(pairs)) {
      out.winner = Player::Spoiler;
      out.witness.push_back("designated pairs already violate a win condition");
      return out;
    }
    if (solve(pairs, rounds)) return out;
    out.winner = Player::Spoiler;
    auto cur = pairs;
    for (std::uint32_t r = rounds; r > 0; --r) {
      const auto mv = spoiler_winning_move(cur, r);
      if (!mv) break;
      const auto [side, node] = *mv;
      std::ostringstream line;
      line << "spoiler " << (side == Side::First ? "T1:" : "T2:") << node;
      const std::size_t other = side == Side::First ? b_.size() : a_.size();
      std::optional<NodeId> reply;
      for (NodeId w = 0; w < other && !reply; ++w) {
        const PebblePair p = side == Side::First ? PebblePair{node, w} : PebblePair{w, node};
        if (fits(cur, p)) reply = w;
      }
      if (!reply) {
        line << " no legal reply";
        out.witness.push_back(line.str());
        break;
      }
      line << " duplicator " << (side == Side::First ? "T2:" : "T1:") << *reply;
      out.witness.push_back(line.str());
      cur.push_back(side == Side::First ? PebblePair{node, *reply} : PebblePair{*reply, node});
    }
    return out;
  }

  std::size_t positions() const noexcept { return memo_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
      std::size_t h = 1469598103934665603ull;
      for (auto x : v) h = (h ^ x) * 1099511628211ull;
      return h;
    }
  };

  static std::vector<std::vector<std::uint32_t>> all_distances(const RootedTree& t) {
    const std::size_t n = t.size();
    std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, 0));
    for (NodeId s = 0; s < n; ++s) {
      std::vector<NodeId> queue{s};
      std::vector<bool> seen(n, false);
      seen[s] = true;
      for (std::size_t i = 0; i < queue.size(); ++i) {
        const NodeId v = queue[i];
        auto visit = [&](NodeId w) {
          if (!seen[w]) {
            seen[w] = true;
            d[s][w] = d[s][v] + 1;
            queue.push_back(w);
          }
        };
        if (auto p = t.parent(v)) visit(*p);
        for (NodeId c : t.children(v)) visit(c);
      }
    }
    return d;
  }

  void check(PebblePair p) const {
    if (!a_.tree.valid(p.x) || !b_.tree.valid(p.y)) throw InvalidArgument("pebble on an invalid node id");
  }

  bool compatible(PebblePair p, PebblePair q) const {
    if ((p.x == q.x) != (p.y == q.y)) return false;
    const auto pa = a_.tree.parent(q.x);
    const auto pb = b_.tree.parent(q.y);
    if ((pa && *pa == p.x) != (pb && *pb == p.y)) return false;
    const auto qa = a_.tree.parent(p.x);
    const auto qb = b_.tree.parent(p.y);
    if ((qa && *qa == q.x) != (qb && *qb == q.y)) return false;
    if (rules_ == Rules::Dehr && dist_a_[p.x][q.x] != dist_b_[p.y][q.y]) return false;
    return true;
  }

  bool solve(const std::vector<PebblePair>& pairs, std::uint32_t rounds) {
    if (rounds == 0) return true;
    std::vector<PebblePair> sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::uint32_t> key{rounds};
    for (const auto& p : sorted) {
      key.push_back(p.x);
      key.push_back(p.y);
    }
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= limits_.max_positions) {
      throw GuardExceeded("pebble solver: more than " + std::to_string(limits_.max_positions) + " positions");
    }
    bool result = true;
    for (Side side : {Side::First, Side::Second}) {
      const std::size_t n = side == Side::First ? a_.size() : b_.size();
      for (NodeId v = 0; v < n && result; ++v) {
        // Pebbled nodes and the root are answered by their partners; that
        // leaves the position unchanged with one round fewer.
        if (v == 0) continue;
        const bool pebbled = std::any_of(sorted.begin(), sorted.end(), [&](const PebblePair& p) {
          return side == Side::First ? p.x == v : p.y == v;
        });
        if (pebbled) continue;
        bool answered = false;
        const std::size_t other = side == Side::First ? b_.size() : a_.size();
        for (NodeId w = 0; w < other && !answered; ++w) {
          const PebblePair p = side == Side::First ? PebblePair{v, w} : PebblePair{w, v};
          if (!fits(sorted, p)) continue;
          auto next = sorted;
          next.push_back(p);
          answered = solve(next, rounds - 1);
        }
        if (!answered) result = false;
      }
      if (!result) break;
    }
    memo_.emplace(std::move(key), result);
    return result;
  }

  ColouredTree a_;
  ColouredTree b_;
  Rules rules_;
  SolverLimits limits_;
  std::vector<std::vector<std::uint32_t>> dist_a_;
  std::vector<std::vector<std::uint32_t>> dist_b_;
  std::unordered_map<std::vector<std::uint32_t>, bool, KeyHash> memo_;
};

/// Exact DEHR verdict with k rounds in total, `designated` counting towards k.
inline Verdict solve_dehr(const ColouredTree& a, const ColouredTree& b, std::uint32_t k,
                          const std::vector<PebblePair>& designated = {}, SolverLimits limits = {}) {
  if (designated.size() > k) throw InvalidArgument("more designated pairs than rounds");
  PebbleSolver solver(a, b, Rules::Dehr, limits);
  return solver.verdict(designated, k - static_cast<std::uint32_t>(designated.size()));
}

/// All nodes of the other tree corresponding to `u` (on `side`) given a
/// winnable configuration of designated pairs, k rounds in total.
inline std::vector<NodeId> corresponding_nodes(PebbleSolver& solver, std::uint32_t k,
                                               const std::vector<PebblePair>& designated, Side side, NodeId u) {
  if (designated.size() >= k) throw InvalidArgument("no round left for a corresponding node");
  const auto left = k - static_cast<std::uint32_t>(designated.size());
  if (!solver.duplicator_wins(designated, left)) throw InvalidArgument("configuration is not winnable");
  return solver.winning_replies(designated, left, side, u);
}

inline std::vector<NodeId> corresponding_nodes(const ColouredTree& a, const ColouredTree& b, std::uint32_t k,
                                               const std::vector<PebblePair>& designated, Side side, NodeId u) {
  PebbleSolver solver(a, b, Rules::Dehr);
  return corresponding_nodes(solver, k, designated, side, u);
}

/// Deterministic choice among candidates: least depth, then least id.
inline std::optional<NodeId> pick_shallowest(const RootedTree& t, const std::vector<NodeId>& candidates) {
  std::optional<NodeId> best;
  for (NodeId v : candidates) {
    if (!best || t.depth(v) < t.depth(*best) || (t.depth(v) == t.depth(*best) && v < *best)) best = v;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Set-pebble game with the set round.

struct SetPebbleOptions {
  /// Also let Spoiler colour the second tree first (the first tree is the
  /// only choice in the set round otherwise).
  bool symmetric = false;
  std::uint64_t max_colouring_pairs = 1'000'000;
  SolverLimits solver;
};

inline Verdict solve_set_pebble_ehr(const RootedTree& t1, const RootedTree& t2, const Palette& palette,
                                    std::uint32_t k, SetPebbleOptions opts = {}) {
  if (t1.infinite() || t2.infinite()) throw InvalidArgument("set-pebble solver needs finite trees");
  const std::uint64_t c1 = rooted_colouring_count(t1.size(), palette);
  const std::uint64_t c2 = rooted_colouring_count(t2.size(), palette);
  if (c1 == UINT64_MAX || c2 == UINT64_MAX || (c2 != 0 && c1 > opts.max_colouring_pairs / c2)) {
    throw GuardExceeded("set-pebble solver: colouring space too large");
  }
  auto colour_all = [](const RootedTree& t, const RootedTree& other, const Palette& p, std::uint32_t rounds,
                       const SetPebbleOptions& o, bool spoiler_on_first) -> std::optional<std::string> {
    std::optional<std::string> failure;
    for_each_rooted_colouring(t, p, [&](const std::vector<Colour>& sc) {
      if (failure) return;
      ColouredTree spoiler_tree{t, sc};
      bool answered = false;
      for_each_rooted_colouring(other, p, [&](const std::vector<Colour>& dc) {
        if (answered) return;
        ColouredTree dup_tree{other, dc};
        PebbleSolver solver = spoiler_on_first ? PebbleSolver(spoiler_tree, dup_tree, Rules::Ehr, o.solver)
                                               : PebbleSolver(dup_tree, spoiler_tree, Rules::Ehr, o.solver);
        answered = solver.duplicator_wins({}, rounds);
      });
      if (!answered) {
        std::ostringstream os;
        os << "spoiler colours " << (spoiler_on_first ? "T1" : "T2") << " with";
        for (Colour c : sc) os << " c" << c;
        os << "; no colouring of the other tree survives the pebble rounds";
        failure = os.str();
      }
    });
    return failure;
  };
  Verdict out;
  if (auto f = colour_all(t1, t2, palette, k, opts, true)) {
    out.winner = Player::Spoiler;
    out.witness.push_back(*f);
    return out;
  }
  if (opts.symmetric) {
    if (auto f = colour_all(t2, t1, palette, k, opts, false)) {
      out.winner = Player::Spoiler;
      out.witness.push_back(*f);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Types game.

/// Duplicator wins iff every type occurs equally often on both sides when
/// counts are capped at k.
inline Verdict types_game_verdict(const ColouredTree& t1, const ColouredTree& t2, const Palette& palette,
                                  std::uint32_t m, std::uint32_t k, TypeTable& table) {
  if (table.cutoff() != k) throw InvalidArgument("type table cutoff differs from k");
  require_rooted(t1, palette);
  require_rooted(t2, palette);
  const TypeCensus c1 = census(t1, m, k, table);
  const TypeCensus c2 = census(t2, m, k, table);
  Verdict out;
  std::vector<std::string> diffs;
  auto note = [&](TypeId t) {
    diffs.push_back(table.canonical(t) + " T1:" + std::to_string(c1.count(t)) + " T2:" + std::to_string(c2.count(t)));
  };
  for (auto [t, n] : c1.counts) {
    if (c2.count(t) != n) note(t);
  }
  for (auto [t, n] : c2.counts) {
    if (c1.count(t) == 0) note(t);
  }
  if (!diffs.empty()) {
    std::sort(diffs.begin(), diffs.end());
    out.winner = Player::Spoiler;
    out.witness = std::move(diffs);
  }
  return out;
}

inline Verdict types_game_verdict(const ColouredTree& t1, const ColouredTree& t2, const Palette& palette,
                                  std::uint32_t m, std::uint32_t k) {
  TypeTable table(k);
  return types_game_verdict(t1, t2, palette, m, k, table);
}

}  // namespace ehrlab
