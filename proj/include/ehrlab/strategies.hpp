#pragma once

// Constructive Duplicator strategies. The cluster strategy wins the
// distance-preserving game on depth-m truncations below two nodes of equal
// depth-m type by matching principal branches of equal type. The master
// strategy plays the set-pebble game on path-prefixed trees through
// auxiliary ancestors u_i, v_i of equal augmented type and sub-games on
// their depth-M truncations; its invariants are exposed as monitors.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/games.hpp"
#include "ehrlab/tree.hpp"
#include "ehrlab/type_search.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

// ---------------------------------------------------------------------------
// Thresholds. All comparisons are of the form lhs <= coeff * 3^exp with a
// possibly negative exponent, decided exactly.

namespace detail {

inline std::int64_t pow3(std::uint32_t e) {
  if (e > 39) throw GuardExceeded("3^" + std::to_string(e) + " overflows");
  std::int64_t out = 1;
  for (std::uint32_t i = 0; i < e; ++i) out *= 3;
  return out;
}

inline bool leq_pow3(std::int64_t lhs, std::int64_t coeff, std::int64_t exp) {
  if (exp >= 0) return lhs <= coeff * pow3(static_cast<std::uint32_t>(exp));
  if (lhs <= 0) return true;
  const std::int64_t scale = pow3(static_cast<std::uint32_t>(-exp));
  return lhs <= coeff / scale && lhs * scale <= coeff;
}

}  // namespace detail

/// rho <= 2 * 3^(e - max(i, j)).
inline bool close_within(std::uint32_t i, std::uint32_t j, std::uint64_t rho, std::uint32_t e) {
  return detail::leq_pow3(static_cast<std::int64_t>(rho), 2, static_cast<std::int64_t>(e) - std::max(i, j));
}

/// Closeness with the exponent k + 2.
inline bool close(std::uint32_t i, std::uint32_t j, std::uint64_t rho, std::uint32_t k) {
  return close_within(i, j, rho, k + 2);
}

inline bool threatens_within(std::uint32_t i, std::uint32_t j, std::int64_t depth_i, std::int64_t depth_j,
                             bool aux_of_min_is_root, std::uint32_t D, std::uint32_t e) {
  if (aux_of_min_is_root) return false;
  const std::int64_t delta = centered_mod(depth_i - depth_j, D);
  return detail::leq_pow3(delta < 0 ? -delta : delta, 2, static_cast<std::int64_t>(e) - std::max(i, j));
}

/// Threat with the exponent k + 2; `aux_of_min_is_root` is whether the
/// auxiliary node of round min(i, j) is the root.
inline bool threatens(std::uint32_t i, std::uint32_t j, std::int64_t depth_i, std::int64_t depth_j,
                      bool aux_of_min_is_root, std::uint32_t D, std::uint32_t k) {
  return threatens_within(i, j, depth_i, depth_j, aux_of_min_is_root, D, k + 2);
}

// ---------------------------------------------------------------------------
// Master strategy.

/// k rounds; depth markers with period D beyond D0; types of depth M = 3^e.
struct MasterParams {
  std::uint32_t k = 1;
  std::uint32_t D = 12;
  std::uint32_t D0 = 48;
  std::uint32_t M = 3;
  std::uint32_t e = 1;

  static MasterParams paper(std::uint32_t k) {
    const auto M = static_cast<std::uint32_t>(detail::pow3(k + 2));
    return {k, 4 * M, 100 * M, M, k + 2};
  }
  static MasterParams surrogate() { return {1, 12, 48, 3, 1}; }

  void validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (detail::pow3(e) != M) throw InvalidArgument("M must equal 3^e");
    if (e < k) throw InvalidArgument("e must be >= k");
    if (D == 0 || D % 2 != 0) throw InvalidArgument("D must be a positive even integer");
    if (D0 / 2 < M) throw InvalidArgument("D0/2 must be >= M");
  }
};

struct MasterLimits {
  std::uint32_t max_augmented_colours = 4096;
  SolverLimits solver;
  ReplySearchOptions search;
};

/// Pebble positions and auxiliary nodes; index 0 holds the roots. Entry
/// [t] is the node in tree t (0 = first, 1 = second).
struct MasterState {
  std::vector<std::array<NodeId, 2>> pts{{0, 0}};
  std::vector<std::array<NodeId, 2>> aux{{0, 0}};
  std::vector<std::string> tags{""};

  std::uint32_t rounds() const noexcept { return static_cast<std::uint32_t>(pts.size() - 1); }
  std::vector<PebblePair> pairs() const {
    std::vector<PebblePair> out;
    for (std::size_t i = 1; i < pts.size(); ++i) out.push_back({pts[i][0], pts[i][1]});
    return out;
  }
};

struct MasterRound {
  Side side = Side::First;
  NodeId node = 0;
  NodeId reply = 0;
  std::array<NodeId, 2> aux{0, 0};
  std::string tag;
};

class MasterGame {
 public:
  /// Base colourings on both trees; checks the path-prefix hypothesis and
  /// that the second colouring wins the types game on augmented colours.
  MasterGame(ColouredTree t1, ColouredTree t2, MasterParams p, MasterLimits limits = {})
      : params_(p), limits_(limits), aug_(guard(p, limits, t1, t2)), table_(std::make_unique<TypeTable>(p.k)) {
    base_ = {std::move(t1), std::move(t2)};
    for (int t = 0; t < 2; ++t) {
      if (base_[t].tree.infinite()) throw InvalidArgument("master strategy plays on finite trees");
      require_rooted(base_[t], aug_->base());
      check_path_prefix(base_[t].tree, t);
      enhanced_[t] = enhance(base_[t], *aug_);
      types_[t] = compute_types(enhanced_[t], p.M, *table_).nodes;
    }
    if (!(census_of({p.M, types_[0], {}}, p.k) == census_of({p.M, types_[1], {}}, p.k))) {
      throw InvalidArgument("second colouring does not win the types game on augmented colours");
    }
  }

  /// Set round: Duplicator answers sigma1 on t1 with a census-matching
  /// augmented colouring of t2, checks it is legal and strips the markers.
  /// nullopt when no reply exists.
  static std::optional<MasterGame> from_set_round(const ColouredTree& t1, const RootedTree& t2, MasterParams p,
                                                  MasterLimits limits = {}) {
    const AugmentedPalette aug = guard(p, limits, t1, ColouredTree{t2, std::vector<Colour>(t2.size(), 0)});
    TypeTable table(p.k);
    const ColouredTree e1 = enhance(t1, aug);
    auto reply = find_types_game_reply(e1, t2, p.M, table, limits.search);
    if (!reply) return std::nullopt;
    ColouredTree e2{t2, *reply};
    if (!is_legal(e2, aug)) throw InvariantViolation("types-game reply is not legal");
    return MasterGame(t1, strip_markers(e2, aug), p, limits);
  }

  const MasterParams& params() const noexcept { return params_; }
  const AugmentedPalette& palette() const noexcept { return *aug_; }
  const ColouredTree& base(int t) const { return base_.at(t); }
  const ColouredTree& enhanced(int t) const { return enhanced_.at(t); }
  TypeId type_of(int t, NodeId v) const { return types_.at(t).at(v); }
  TypeTable& table() noexcept { return *table_; }

  /// Depth-d node on the prefix path of tree t.
  NodeId path_node(int t, std::uint32_t d) const { return path_.at(t).at(d); }

  /// Sub-game on T1(u)|_M and T2(v)|_M with augmented colours.
  struct SubGame {
    Extracted a;
    Extracted b;
    std::unordered_map<NodeId, NodeId> into_a;
    std::unordered_map<NodeId, NodeId> into_b;
    std::unique_ptr<PebbleSolver> solver;
  };

  SubGame& sub_game(NodeId u1, NodeId v2) {
    auto key = std::make_pair(u1, v2);
    if (auto it = subs_.find(key); it != subs_.end()) return *it->second;
    auto g = std::make_unique<SubGame>();
    g->a = extract(enhanced_[0], u1, params_.M);
    g->b = extract(enhanced_[1], v2, params_.M);
    for (NodeId i = 0; i < g->a.origin.size(); ++i) g->into_a.emplace(g->a.origin[i], i);
    for (NodeId i = 0; i < g->b.origin.size(); ++i) g->into_b.emplace(g->b.origin[i], i);
    g->solver = std::make_unique<PebbleSolver>(g->a.tree, g->b.tree, Rules::Dehr, limits_.solver);
    return *subs_.emplace(key, std::move(g)).first->second;
  }

 private:
  static AugmentedPalette guard(const MasterParams& p, const MasterLimits& limits, const ColouredTree& t1,
                                const ColouredTree& t2) {
    p.validate();
    Colour top = 0;
    for (Colour c : t1.colours) top = std::max(top, c);
    for (Colour c : t2.colours) top = std::max(top, c);
    AugmentedPalette aug(Palette(std::max<Colour>(top, 1)), p.D, p.D0);
    const std::uint64_t flat = static_cast<std::uint64_t>(aug.base().size()) * aug.marker_count();
    if (flat > limits.max_augmented_colours) {
      throw GuardExceeded("augmented palette has " + std::to_string(flat) + " colours, limit " +
                          std::to_string(limits.max_augmented_colours) +
                          "; a types-game reply at these parameters is out of reach");
    }
    return aug;
  }

  void check_path_prefix(const RootedTree& t, int which) {
    const std::uint32_t half = params_.D0 / 2;
    std::vector<NodeId> at(half + 1, kNoNode);
    for (NodeId v = 0; v < t.size(); ++v) {
      const auto d = t.depth(v);
      if (d > half) continue;
      if (at[d] != kNoNode) throw InvalidArgument("hypothesis violated: T" + std::to_string(which + 1) + "|_{D0/2} is not a path");
      at[d] = v;
    }
    if (std::find(at.begin(), at.end(), kNoNode) != at.end()) {
      throw InvalidArgument("hypothesis violated: T" + std::to_string(which + 1) + " is shallower than D0/2");
    }
    path_[which] = std::move(at);
  }

  MasterParams params_;
  MasterLimits limits_;
  std::optional<AugmentedPalette> aug_;
  std::unique_ptr<TypeTable> table_;
  std::array<ColouredTree, 2> base_;
  std::array<ColouredTree, 2> enhanced_;
  std::array<std::vector<TypeId>, 2> types_;
  std::array<std::vector<NodeId>, 2> path_;
  std::map<std::pair<NodeId, NodeId>, std::unique_ptr<SubGame>> subs_;
};

namespace detail {

inline int tree_index(Side s) { return s == Side::First ? 0 : 1; }

// Smallest-depth, smallest-id node of tree b with the type of u, not used as
// an auxiliary node so far.
inline NodeId fresh_aux(MasterGame& g, const MasterState& st, int a, NodeId u) {
  const int b = 1 - a;
  const TypeId want = g.type_of(a, u);
  const RootedTree& tb = g.base(b).tree;
  std::vector<NodeId> candidates;
  for (NodeId v = 0; v < tb.size(); ++v) {
    if (g.type_of(b, v) != want) continue;
    bool used = false;
    for (const auto& x : st.aux) used = used || x[b] == v;
    if (!used) candidates.push_back(v);
  }
  auto best = pick_shallowest(tb, candidates);
  if (!best) throw InvariantViolation("no unused node of the auxiliary type in T" + std::to_string(b + 1));
  return *best;
}

inline NodeId sub_game_reply(MasterGame& g, const MasterState& st, int a, NodeId x, NodeId u, NodeId v) {
  const int b = 1 - a;
  const NodeId u1 = a == 0 ? u : v;
  const NodeId v2 = a == 0 ? v : u;
  auto& sub = g.sub_game(u1, v2);
  std::vector<PebblePair> config;
  for (std::size_t l = 1; l < st.pts.size(); ++l) {
    if (st.aux[l][0] != u1) continue;
    if (st.aux[l][1] != v2) throw InvariantViolation("auxiliary nodes are not paired consistently");
    auto ia = sub.into_a.find(st.pts[l][0]);
    auto ib = sub.into_b.find(st.pts[l][1]);
    if (ia == sub.into_a.end() || ib == sub.into_b.end()) {
      throw InvariantViolation("an earlier pebble lies outside its auxiliary subtree");
    }
    config.push_back({ia->second, ib->second});
  }
  const auto& into = a == 0 ? sub.into_a : sub.into_b;
  auto xi = into.find(x);
  if (xi == into.end()) throw InvariantViolation("move lies outside the depth-M subtree of its auxiliary node");
  const Side side = a == 0 ? Side::First : Side::Second;
  if (!sub.solver->duplicator_wins(config, g.params().k - static_cast<std::uint32_t>(config.size()))) {
    throw InvariantViolation("sub-game configuration is not winnable");
  }
  const auto local = sub.solver->winning_replies(config, g.params().k - static_cast<std::uint32_t>(config.size()),
                                                 side, xi->second);
  const Extracted& other = a == 0 ? sub.b : sub.a;
  std::vector<NodeId> candidates;
  for (NodeId c : local) candidates.push_back(other.origin[c]);
  auto best = pick_shallowest(g.base(b).tree, candidates);
  if (!best) throw InvariantViolation("no corresponding node in the sub-game");
  return *best;
}

}  // namespace detail

/// Duplicator's answer to Spoiler's move `node` in the tree on `side`;
/// appends the round to the state.
inline MasterRound master_reply(MasterGame& g, MasterState& st, Side side, NodeId node) {
  const MasterParams& p = g.params();
  const std::uint32_t s = st.rounds();
  if (s >= p.k) throw InvalidArgument("all " + std::to_string(p.k) + " pebble rounds have been played");
  const int a = detail::tree_index(side);
  const int b = 1 - a;
  const RootedTree& ta = g.base(a).tree;
  if (!ta.valid(node)) throw InvalidArgument("invalid node id " + std::to_string(node));
  const NodeId root = ta.root();
  const std::int64_t dx = ta.depth(node);
  const std::uint32_t next = s + 1;

  MasterRound out;
  out.side = side;
  out.node = node;
  NodeId u = kNoNode;
  NodeId v = kNoNode;
  NodeId y = kNoNode;

  std::optional<std::size_t> close_to;
  for (std::size_t al = 0; al <= s && !close_to; ++al) {
    if (close_within(static_cast<std::uint32_t>(al), next, distance(ta, node, st.pts[al][a]), p.e)) close_to = al;
  }
  auto reuse_or_fresh = [&](NodeId cand, const char* reuse_tag, const char* fresh_tag) {
    u = cand;
    for (std::size_t be = 0; be <= s; ++be) {
      if (st.aux[be][a] == u) {
        v = st.aux[be][b];
        out.tag = reuse_tag;
        return;
      }
    }
    v = detail::fresh_aux(g, st, a, u);
    out.tag = fresh_tag;
  };

  if (close_to) {
    u = st.aux[*close_to][a];
    v = st.aux[*close_to][b];
    out.tag = "CLOSE";
  } else {
    std::optional<std::size_t> threat;
    for (std::size_t al = 1; al <= s && !threat; ++al) {
      if (threatens_within(static_cast<std::uint32_t>(al), next, ta.depth(st.pts[al][a]), dx, st.aux[al][a] == root,
                           p.D, p.e)) {
        threat = al;
      }
    }
    if (threat) {
      const auto al = *threat;
      const std::int64_t delta = static_cast<std::int64_t>(distance(ta, st.pts[al][a], st.aux[al][a])) +
                                 centered_mod(dx - static_cast<std::int64_t>(ta.depth(st.pts[al][a])), p.D);
      if (delta >= 0 && delta <= dx) {
        reuse_or_fresh(ta.ancestor(node, static_cast<std::uint32_t>(delta)), "T1", "T2");
      } else {
        if (dx > static_cast<std::int64_t>(p.D0 / 2)) throw InvariantViolation("case T3 off the prefix path");
        u = root;
        v = g.base(b).tree.root();
        y = g.path_node(b, static_cast<std::uint32_t>(dx));
        out.tag = "T3";
      }
    } else {
      const std::int64_t reach = detail::pow3(p.e - next);
      if (reach > dx) throw InvariantViolation("far move without an ancestor at distance 3^(e-s-1)");
      reuse_or_fresh(ta.ancestor(node, static_cast<std::uint32_t>(reach)), "NT1", "NT2");
    }
  }
  if (y == kNoNode) y = detail::sub_game_reply(g, st, a, node, u, v);

  std::array<NodeId, 2> pt{};
  std::array<NodeId, 2> ax{};
  pt[a] = node;
  pt[b] = y;
  ax[a] = u;
  ax[b] = v;
  st.pts.push_back(pt);
  st.aux.push_back(ax);
  st.tags.push_back(out.tag);
  out.reply = y;
  out.aux = ax;
  return out;
}

// ---------------------------------------------------------------------------
// Monitors.

/// Violations of the six maintained conditions: aux pairing (C1), equal
/// aux types (C2), distance bounds to the aux node (C3), close iff close
/// with equal aux and distances (C4), winnable sub-configurations (C5) and
/// depth congruence of aux nodes for threatening pairs (C6).
inline std::vector<std::string> check_C_conditions(MasterGame& g, const MasterState& st) {
  const MasterParams& p = g.params();
  std::vector<std::string> out;
  const std::size_t n = st.pts.size();
  const std::array<const RootedTree*, 2> t{&g.base(0).tree, &g.base(1).tree};
  auto idx = [](std::size_t i) { return std::to_string(i); };
  for (std::size_t i = 0; i < n; ++i) {
    if (g.type_of(0, st.aux[i][0]) != g.type_of(1, st.aux[i][1])) {
      out.push_back("C2: round " + idx(i) + " auxiliary nodes have different types");
    }
    if (i >= 1) {
      const std::int64_t x = static_cast<std::int64_t>(p.e) - static_cast<std::int64_t>(i);
      for (int w = 0; w < 2; ++w) {
        const auto rho = static_cast<std::int64_t>(distance(*t[w], st.pts[i][w], st.aux[i][w]));
        const bool at_root = st.aux[i][w] == t[w]->root();
        // 3^x <= rho <= M - 3^x; for x < 0 these reduce to 1 <= rho < M.
        const std::int64_t M = p.M;
        const bool lower = x >= 0 ? rho >= detail::pow3(static_cast<std::uint32_t>(x)) : rho >= 1;
        const bool upper = x >= 0 ? rho <= M - detail::pow3(static_cast<std::uint32_t>(x)) : rho < M;
        if (!upper || (!at_root && !lower)) {
          out.push_back("C3: round " + idx(i) + " distance " + std::to_string(rho) + " to the auxiliary node in T" +
                        std::to_string(w + 1) + " is out of bounds");
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool ux = st.aux[i][0] == st.aux[j][0];
      const bool vy = st.aux[i][1] == st.aux[j][1];
      if (i < j && ux != vy) out.push_back("C1: rounds " + idx(i) + "," + idx(j) + " auxiliary equality differs");
      const auto i32 = static_cast<std::uint32_t>(i);
      const auto j32 = static_cast<std::uint32_t>(j);
      const auto rx = distance(*t[0], st.pts[i][0], st.pts[j][0]);
      const auto ry = distance(*t[1], st.pts[i][1], st.pts[j][1]);
      const bool cx = close_within(i32, j32, rx, p.e);
      const bool cy = close_within(i32, j32, ry, p.e);
      if (i < j && cx != cy) out.push_back("C4: rounds " + idx(i) + "," + idx(j) + " close in one tree only");
      if (i < j && cx && cy && (!ux || !vy || rx != ry)) {
        out.push_back("C4: rounds " + idx(i) + "," + idx(j) + " close but auxiliary nodes or distances differ");
      }
      const std::size_t lo_ij = std::min(i, j);
      const std::size_t hi_ij = std::max(i, j);
      if (i < j && threatens_within(i32, j32, t[0]->depth(st.pts[i][0]), t[0]->depth(st.pts[j][0]),
                                    st.aux[lo_ij][0] == t[0]->root(), p.D, p.e)) {
        const bool roots = st.aux[hi_ij][0] == t[0]->root() && st.aux[hi_ij][1] == t[1]->root();
        const auto cong = [&](int w) {
          const std::int64_t di = t[w]->depth(st.aux[i][w]);
          const std::int64_t dj = t[w]->depth(st.aux[j][w]);
          return centered_mod(di - dj, p.D) == 0;
        };
        if (!roots && !(cong(0) && cong(1))) {
          out.push_back("C6: rounds " + idx(i) + "," + idx(j) + " threaten but auxiliary depths are not congruent");
        }
      }
    }
  }
  std::set<std::pair<NodeId, NodeId>> classes;
  for (std::size_t i = 0; i < n; ++i) classes.insert({st.aux[i][0], st.aux[i][1]});
  for (auto [u1, v2] : classes) {
    std::vector<PebblePair> config;
    bool inside = true;
    MasterGame::SubGame* sub = nullptr;
    try {
      sub = &g.sub_game(u1, v2);
    } catch (const InvalidArgument&) {
      out.push_back("C5: sub-game at auxiliary pair could not be built");
      continue;
    }
    for (std::size_t l = 1; l < n; ++l) {
      if (st.aux[l][0] != u1 || st.aux[l][1] != v2) continue;
      auto ia = sub->into_a.find(st.pts[l][0]);
      auto ib = sub->into_b.find(st.pts[l][1]);
      if (ia == sub->into_a.end() || ib == sub->into_b.end()) {
        inside = false;
        break;
      }
      config.push_back({ia->second, ib->second});
    }
    if (!inside) {
      out.push_back("C5: a pebble lies outside the depth-M subtree of its auxiliary node");
      continue;
    }
    if (config.size() > p.k || !sub->solver->duplicator_wins(config, p.k - static_cast<std::uint32_t>(config.size()))) {
      out.push_back("C5: configuration at auxiliary nodes " + std::to_string(u1) + "/" + std::to_string(v2) +
                    " is not winnable");
    }
  }
  return out;
}

/// Threat transfer between the trees, and equal numbers of distinct used
/// auxiliary nodes per type.
inline std::vector<std::string> remark_violations(MasterGame& g, const MasterState& st) {
  const MasterParams& p = g.params();
  std::vector<std::string> out;
  const std::size_t n = st.pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::array<bool, 2> thr{};
      for (int w = 0; w < 2; ++w) {
        const RootedTree& t = g.base(w).tree;
        thr[w] = threatens_within(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), t.depth(st.pts[i][w]),
                                  t.depth(st.pts[j][w]), st.aux[i][w] == t.root(), p.D, p.e);
      }
      if (thr[0] != thr[1]) {
        out.push_back("threat transfer: rounds " + std::to_string(i) + "," + std::to_string(j) + " threaten in one tree only");
      }
    }
  }
  std::map<TypeId, std::array<std::set<NodeId>, 2>> used;
  for (const auto& ax : st.aux) {
    for (int w = 0; w < 2; ++w) used[g.type_of(w, ax[w])][w].insert(ax[w]);
  }
  for (const auto& [ty, sets] : used) {
    if (sets[0].size() != sets[1].size()) {
      out.push_back("aux count: type " + g.table().canonical(ty) + " used " + std::to_string(sets[0].size()) + " vs " +
                    std::to_string(sets[1].size()) + " times");
    }
  }
  return out;
}

struct CImpliesEhr {
  bool holds = true;
  std::vector<std::string> premise_violations;
  std::string ehr_violation;
};

/// Whenever the C-conditions hold, the EHR win conditions hold on the base
/// colourings. Reports which premise failed otherwise.
inline CImpliesEhr c_implies_ehr(MasterGame& g, const MasterState& st) {
  CImpliesEhr out;
  out.premise_violations = check_C_conditions(g, st);
  out.ehr_violation = ehr_violation(g.base(0), g.base(1), st.pairs());
  out.holds = !out.premise_violations.empty() || out.ehr_violation.empty();
  return out;
}

/// One trace record: case tag, chosen nodes, aux nodes, monitor result.
inline std::string trace_record(std::uint32_t round, const MasterRound& r, const std::vector<std::string>& violations) {
  std::ostringstream os;
  const bool first = r.side == Side::First;
  os << "round=" << round << " tag=" << r.tag << " spoiler=T" << (first ? 1 : 2) << " x=" << (first ? r.node : r.reply)
     << " y=" << (first ? r.reply : r.node) << " u=" << r.aux[0] << " v=" << r.aux[1]
     << " monitor=" << (violations.empty() ? "ok" : violations.front());
  return os.str();
}

struct PlayoutReport {
  std::uint64_t playouts = 0;
  std::uint64_t losses = 0;
  std::uint64_t monitor_violations = 0;
  std::uint64_t implication_failures = 0;
  std::vector<std::string> failures;
  bool truncated = false;
};

/// Every Spoiler move sequence (both trees, every round) against the master
/// strategy, checking the monitors after every reply and EHR at the end.
inline PlayoutReport exhaustive_master_playouts(MasterGame& g, std::uint64_t max_playouts = 10000) {
  PlayoutReport rep;
  MasterState st;
  auto note = [&](const std::string& s) {
    if (rep.failures.size() < 20) rep.failures.push_back(s);
  };
  auto rec = [&](auto&& self) -> void {
    if (rep.truncated) return;
    if (st.rounds() == g.params().k) {
      if (rep.playouts >= max_playouts) {
        rep.truncated = true;
        return;
      }
      ++rep.playouts;
      if (!ehr_check(g.base(0), g.base(1), st.pairs())) {
        ++rep.losses;
        note("EHR lost: " + ehr_violation(g.base(0), g.base(1), st.pairs()));
      }
      return;
    }
    for (int w = 0; w < 2; ++w) {
      for (NodeId x = 0; x < g.base(w).size(); ++x) {
        MasterState saved = st;
        master_reply(g, st, w == 0 ? Side::First : Side::Second, x);
        auto viol = check_C_conditions(g, st);
        auto rem = remark_violations(g, st);
        if (!viol.empty() || !rem.empty()) {
          ++rep.monitor_violations;
          note(trace_record(st.rounds(), MasterRound{w == 0 ? Side::First : Side::Second, x, st.pts.back()[1 - w],
                                                     st.aux.back(), st.tags.back()},
                            viol.empty() ? rem : viol));
        }
        if (!c_implies_ehr(g, st).holds) ++rep.implication_failures;
        self(self);
        st = std::move(saved);
        if (rep.truncated) return;
      }
    }
  };
  rec(rec);
  return rep;
}

// ---------------------------------------------------------------------------
// Cluster strategy on depth-m truncations.

class ClusterGame {
 public:
  /// a and b are cut at depth m; their roots must have equal depth-m types.
  ClusterGame(const ColouredTree& a, const ColouredTree& b, std::uint32_t m, std::uint32_t k, SolverLimits limits = {})
      : m_(m), k_(k), limits_(limits) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    t_[0] = truncate(a, m);
    t_[1] = truncate(b, m);
    TypeTable table(k);
    if (compute_types(t_[0], m, table).nodes[0] != compute_types(t_[1], m, table).nodes[0]) {
      throw InvalidArgument("roots have different depth-m types");
    }
    for (int w = 0; w < 2; ++w) {
      const RootedTree& t = t_[w].tree;
      branch_[w].assign(t.size(), kNoNode);
      for (NodeId v : t.bfs_order()) {
        if (v == t.root()) continue;
        const NodeId par = *t.parent(v);
        branch_[w][v] = par == t.root() ? v : branch_[w][par];
      }
      if (m >= 1) {
        const auto ty = compute_types(t_[w], m - 1, table).nodes;
        for (NodeId c : t.children(t.root())) branch_type_[w][c] = ty[c];
      }
    }
  }

  const ColouredTree& tree(int w) const { return t_.at(w); }
  std::uint32_t m() const noexcept { return m_; }
  std::uint32_t k() const noexcept { return k_; }
  /// Child of the root whose branch holds v; kNoNode for the root.
  NodeId branch_of(int w, NodeId v) const { return branch_.at(w).at(v); }
  TypeId branch_type(int w, NodeId child) const { return branch_type_.at(w).at(child); }

  struct BranchGame {
    Extracted a;
    Extracted b;
    std::unordered_map<NodeId, NodeId> into_a;
    std::unordered_map<NodeId, NodeId> into_b;
    std::unique_ptr<PebbleSolver> solver;
  };

  BranchGame& branch_game(NodeId c1, NodeId c2) {
    auto key = std::make_pair(c1, c2);
    if (auto it = games_.find(key); it != games_.end()) return *it->second;
    auto g = std::make_unique<BranchGame>();
    g->a = extract(t_[0], c1, std::nullopt);
    g->b = extract(t_[1], c2, std::nullopt);
    for (NodeId i = 0; i < g->a.origin.size(); ++i) g->into_a.emplace(g->a.origin[i], i);
    for (NodeId i = 0; i < g->b.origin.size(); ++i) g->into_b.emplace(g->b.origin[i], i);
    g->solver = std::make_unique<PebbleSolver>(g->a.tree, g->b.tree, Rules::Dehr, limits_);
    return *games_.emplace(key, std::move(g)).first->second;
  }

 private:
  std::uint32_t m_;
  std::uint32_t k_;
  SolverLimits limits_;
  std::array<ColouredTree, 2> t_;
  std::array<std::vector<NodeId>, 2> branch_;
  std::array<std::unordered_map<NodeId, TypeId>, 2> branch_type_;
  std::map<std::pair<NodeId, NodeId>, std::unique_ptr<BranchGame>> games_;
};

/// Pairs played so far (x in the first truncated tree, y in the second).
struct ClusterState {
  std::vector<PebblePair> pairs;
};

struct ClusterRound {
  Side side = Side::First;
  NodeId node = 0;
  NodeId reply = 0;
  std::string tag;
};

inline ClusterRound lemma36_reply(ClusterGame& g, ClusterState& st, Side side, NodeId node) {
  if (st.pairs.size() >= g.k()) throw InvalidArgument("all rounds have been played");
  const int a = detail::tree_index(side);
  const int b = 1 - a;
  if (!g.tree(a).tree.valid(node)) throw InvalidArgument("invalid node id " + std::to_string(node));
  auto at = [](const PebblePair& p, int w) { return w == 0 ? p.x : p.y; };
  ClusterRound out{side, node, 0, ""};
  if (node == g.tree(a).root()) {
    out.reply = g.tree(b).root();
    out.tag = "B1";
  } else {
    const NodeId ba = g.branch_of(a, node);
    NodeId bb = kNoNode;
    for (const auto& p : st.pairs) {
      if (at(p, a) != g.tree(a).root() && g.branch_of(a, at(p, a)) == ba) {
        bb = g.branch_of(b, at(p, b));
        break;
      }
    }
    if (bb != kNoNode) {
      out.tag = "B2";
    } else {
      out.tag = "B3";
      const TypeId want = g.branch_type(a, ba);
      for (NodeId c : g.tree(b).tree.children(g.tree(b).root())) {
        if (g.branch_type(b, c) != want) continue;
        bool occupied = false;
        for (const auto& p : st.pairs) {
          occupied = occupied || (at(p, b) != g.tree(b).root() && g.branch_of(b, at(p, b)) == c);
        }
        if (!occupied && (bb == kNoNode || c < bb)) bb = c;
      }
      if (bb == kNoNode) throw InvariantViolation("no free principal branch of the required type");
    }
    const NodeId c1 = a == 0 ? ba : bb;
    const NodeId c2 = a == 0 ? bb : ba;
    auto& bg = g.branch_game(c1, c2);
    std::vector<PebblePair> config;
    for (const auto& p : st.pairs) {
      auto ia = bg.into_a.find(p.x);
      auto ib = bg.into_b.find(p.y);
      if (ia != bg.into_a.end() && ib != bg.into_b.end()) config.push_back({ia->second, ib->second});
    }
    const auto left = g.k() - static_cast<std::uint32_t>(config.size());
    if (!bg.solver->duplicator_wins(config, left)) throw InvariantViolation("branch configuration is not winnable");
    const auto& into = a == 0 ? bg.into_a : bg.into_b;
    const auto local = bg.solver->winning_replies(config, left, side, into.at(node));
    const Extracted& other = a == 0 ? bg.b : bg.a;
    std::vector<NodeId> candidates;
    for (NodeId c : local) candidates.push_back(other.origin[c]);
    auto best = pick_shallowest(g.tree(b).tree, candidates);
    if (!best) throw InvariantViolation("no corresponding node in the branch game");
    out.reply = *best;
  }
  st.pairs.push_back(a == 0 ? PebblePair{node, out.reply} : PebblePair{out.reply, node});
  return out;
}

/// A1: root pebbled in one tree iff in the other. A2: clusters correspond,
/// lie in branches of equal type and are winnable in their branch pair.
inline std::vector<std::string> check_cluster_conditions(ClusterGame& g, const ClusterState& st) {
  std::vector<std::string> out;
  const NodeId r1 = g.tree(0).root();
  const NodeId r2 = g.tree(1).root();
  std::map<NodeId, std::vector<std::size_t>> xc, yc;
  for (std::size_t i = 0; i < st.pairs.size(); ++i) {
    const auto& p = st.pairs[i];
    if ((p.x == r1) != (p.y == r2)) out.push_back("A1: round " + std::to_string(i + 1) + " pebbles one root only");
    if (p.x != r1) xc[g.branch_of(0, p.x)].push_back(i);
    if (p.y != r2) yc[g.branch_of(1, p.y)].push_back(i);
  }
  std::map<std::vector<std::size_t>, NodeId> ybranch;
  for (const auto& [c, idx] : yc) ybranch[idx] = c;
  for (const auto& [c1, idx] : xc) {
    auto it = ybranch.find(idx);
    if (it == ybranch.end()) {
      out.push_back("A2: x-cluster in branch " + std::to_string(c1) + " has no matching y-cluster");
      continue;
    }
    const NodeId c2 = it->second;
    if (g.branch_type(0, c1) != g.branch_type(1, c2)) {
      out.push_back("A2: clusters in branches " + std::to_string(c1) + "/" + std::to_string(c2) + " differ in type");
      continue;
    }
    auto& bg = g.branch_game(c1, c2);
    std::vector<PebblePair> config;
    for (auto i : idx) config.push_back({bg.into_a.at(st.pairs[i].x), bg.into_b.at(st.pairs[i].y)});
    if (config.size() > g.k() || !bg.solver->duplicator_wins(config, g.k() - static_cast<std::uint32_t>(config.size()))) {
      out.push_back("A2: cluster in branches " + std::to_string(c1) + "/" + std::to_string(c2) + " is not winnable");
    }
  }
  if (xc.size() != yc.size()) out.push_back("A2: different numbers of clusters");
  return out;
}

/// Every Spoiler move sequence against the cluster strategy.
inline PlayoutReport exhaustive_cluster_playouts(ClusterGame& g, std::uint64_t max_playouts = 1000000) {
  PlayoutReport rep;
  ClusterState st;
  auto note = [&](const std::string& s) {
    if (rep.failures.size() < 20) rep.failures.push_back(s);
  };
  auto rec = [&](auto&& self) -> void {
    if (rep.truncated) return;
    if (st.pairs.size() == g.k()) {
      if (rep.playouts >= max_playouts) {
        rep.truncated = true;
        return;
      }
      ++rep.playouts;
      if (!dehr_check(g.tree(0), g.tree(1), st.pairs)) {
        ++rep.losses;
        note("DEHR lost: " + dehr_violation(g.tree(0), g.tree(1), st.pairs));
      }
      return;
    }
    for (int w = 0; w < 2; ++w) {
      for (NodeId x = 0; x < g.tree(w).size(); ++x) {
        const std::size_t before = st.pairs.size();
        lemma36_reply(g, st, w == 0 ? Side::First : Side::Second, x);
        if (auto v = check_cluster_conditions(g, st); !v.empty()) {
          ++rep.monitor_violations;
          note(v.front());
        }
        self(self);
        st.pairs.resize(before);
        if (rep.truncated) return;
      }
    }
  };
  rec(rec);
  return rep;
}

}  // namespace ehrlab
