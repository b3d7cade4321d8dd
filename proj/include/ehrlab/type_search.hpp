#pragma once

// Searches over colourings constrained by truncated types. A node can take a
// depth-m type tau exactly when its children can be given depth-m types
// whose depth-(m-1) projections reproduce tau's capped child counts; this
// local rule is decided with a small flow problem and propagated bottom-up.
// On top of that sits a backtracking search for colourings of a tree whose
// capped census equals a prescribed one (Duplicator's types-game replies).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

namespace detail {

/// Max flow with lower and upper bounds on edges, used once per instance.
class BoundedFlow {
 public:
  static constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

  explicit BoundedFlow(std::size_t nodes) : adj_(nodes), excess_(nodes, 0) {}

  std::size_t add_edge(std::size_t u, std::size_t v, std::int64_t lo, std::int64_t hi) {
    const std::size_t id = bounded_.size();
    bounded_.push_back({u, adj_[u].size(), lo, hi - lo});
    arc(u, v, hi - lo);
    excess_[v] += lo;
    excess_[u] -= lo;
    return id;
  }

  /// Whether a flow from s to t meeting every bound exists.
  bool feasible(std::size_t s, std::size_t t) {
    const std::size_t ss = adj_.size();
    const std::size_t tt = ss + 1;
    adj_.resize(ss + 2);
    arc(t, s, kInf);
    std::int64_t need = 0;
    for (std::size_t x = 0; x < ss; ++x) {
      if (excess_[x] > 0) {
        arc(ss, x, excess_[x]);
        need += excess_[x];
      } else if (excess_[x] < 0) {
        arc(x, tt, -excess_[x]);
      }
    }
    return max_flow(ss, tt) == need;
  }

  /// Flow on a bounded edge after a successful feasible().
  std::int64_t flow(std::size_t edge) const {
    const auto& b = bounded_[edge];
    return b.lo + (b.cap - adj_[b.from][b.index].cap);
  }

 private:
  struct Arc {
    std::size_t to;
    std::int64_t cap;
    std::size_t rev;
  };
  struct Bounded {
    std::size_t from;
    std::size_t index;
    std::int64_t lo;
    std::int64_t cap;
  };

  void arc(std::size_t u, std::size_t v, std::int64_t cap) {
    adj_[u].push_back({v, cap, adj_[v].size()});
    adj_[v].push_back({u, 0, adj_[u].size() - 1});
  }

  std::int64_t max_flow(std::size_t s, std::size_t t) {
    std::int64_t total = 0;
    std::vector<int> level(adj_.size());
    std::vector<std::size_t> it(adj_.size());
    for (;;) {
      std::fill(level.begin(), level.end(), -1);
      std::queue<std::size_t> q;
      level[s] = 0;
      q.push(s);
      while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (const auto& a : adj_[u]) {
          if (a.cap > 0 && level[a.to] < 0) {
            level[a.to] = level[u] + 1;
            q.push(a.to);
          }
        }
      }
      if (level[t] < 0) return total;
      std::fill(it.begin(), it.end(), 0);
      while (std::int64_t f = push(s, t, kInf, level, it)) total += f;
    }
  }

  std::int64_t push(std::size_t u, std::size_t t, std::int64_t f, const std::vector<int>& level,
                    std::vector<std::size_t>& it) {
    if (u == t) return f;
    for (; it[u] < adj_[u].size(); ++it[u]) {
      auto& a = adj_[u][it[u]];
      if (a.cap <= 0 || level[a.to] != level[u] + 1) continue;
      if (std::int64_t got = push(a.to, t, std::min(f, a.cap), level, it)) {
        a.cap -= got;
        adj_[a.to][a.rev].cap += got;
        return got;
      }
    }
    return 0;
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<std::int64_t> excess_;
  std::vector<Bounded> bounded_;
};

}  // namespace detail

/// Children sharing the same set of admissible depth-(m-1) projections.
struct ChildGroup {
  std::vector<TypeId> options;
  std::uint32_t count = 0;
};

/// Distributes grouped children over projections so that the capped counts
/// equal `required` (pairs (projection, count in 1..k)); counts equal to k
/// mean "at least k". Returns, per group, how many children take each
/// projection, or nullopt if impossible.
inline std::optional<std::vector<std::vector<std::pair<TypeId, std::uint32_t>>>> fit_children(
    const std::vector<std::pair<TypeId, std::uint32_t>>& required, const std::vector<ChildGroup>& groups,
    std::uint32_t k) {
  std::uint64_t total = 0;
  for (const auto& g : groups) total += g.count;
  std::uint64_t floor_sum = 0;
  bool open = false;
  for (auto [p, e] : required) {
    floor_sum += e;
    open = open || e >= k;
  }
  if (floor_sum > total || (!open && floor_sum != total)) return std::nullopt;

  const std::size_t G = groups.size();
  const std::size_t P = required.size();
  const std::size_t s = 0, t = 1;
  detail::BoundedFlow flow(2 + G + P);
  std::vector<std::vector<std::pair<std::size_t, TypeId>>> edges(G);
  for (std::size_t g = 0; g < G; ++g) {
    flow.add_edge(s, 2 + g, groups[g].count, groups[g].count);
    bool any = false;
    for (std::size_t j = 0; j < P; ++j) {
      const TypeId p = required[j].first;
      if (std::binary_search(groups[g].options.begin(), groups[g].options.end(), p)) {
        edges[g].emplace_back(flow.add_edge(2 + g, 2 + G + j, 0, detail::BoundedFlow::kInf), p);
        any = true;
      }
    }
    if (!any && groups[g].count > 0) return std::nullopt;
  }
  for (std::size_t j = 0; j < P; ++j) {
    const std::int64_t e = required[j].second;
    flow.add_edge(2 + G + j, t, e, e >= k ? detail::BoundedFlow::kInf : e);
  }
  if (!flow.feasible(s, t)) return std::nullopt;
  std::vector<std::vector<std::pair<TypeId, std::uint32_t>>> out(G);
  for (std::size_t g = 0; g < G; ++g) {
    for (auto [edge, p] : edges[g]) {
      if (auto f = flow.flow(edge); f > 0) out[g].emplace_back(p, static_cast<std::uint32_t>(f));
    }
  }
  return out;
}

/// For every node, the candidate depth-m types it can carry such that its
/// whole subtree can be coloured with candidate types only. Colour 0 is
/// allowed at the tree root and nowhere else.
class FeasibleTypes {
 public:
  FeasibleTypes(TypeTable& table, std::vector<TypeId> candidates, std::uint32_t m)
      : table_(table), m_(m), candidates_(std::move(candidates)) {
    std::sort(candidates_.begin(), candidates_.end());
    candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
    for (TypeId t : candidates_) {
      const TypeEntry& e = table_.entry(t);
      if (e.level != m) throw InvalidArgument("candidate type has the wrong depth");
      info_.emplace(t, e);
    }
    sets_.push_back({});
    set_index_.emplace(std::vector<TypeId>{}, 0);
  }

  std::uint32_t depth() const noexcept { return m_; }
  TypeTable& table() noexcept { return table_; }
  const std::vector<TypeId>& candidates() const noexcept { return candidates_; }
  const TypeEntry& info(TypeId t) const { return info_.at(t); }

  /// Set ids per node of the finite part of t. A lasso tail is not looked
  /// at; `extra_child` supplies a fixed depth-(m-1) type for an additional
  /// child of the given node instead.
  std::vector<std::uint32_t> compute(const RootedTree& t, std::optional<std::pair<NodeId, TypeId>> extra_child = {}) {
    const auto order = t.bfs_order();
    std::vector<std::uint32_t> out(t.size(), 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId v = *it;
      std::vector<std::uint32_t> kids;
      for (NodeId c : t.children(v)) kids.push_back(out[c]);
      std::optional<TypeId> extra;
      if (extra_child && extra_child->first == v) extra = extra_child->second;
      out[v] = node_set(v == t.root(), std::move(kids), extra);
    }
    return out;
  }

  const std::vector<TypeId>& set(std::uint32_t id) const { return sets_.at(id); }

  /// Chooses depth-m types for children (given by their set ids) so that a
  /// node of type tau is realized. Returns nullopt if impossible.
  std::optional<std::vector<TypeId>> assign_children(TypeId tau, const std::vector<std::uint32_t>& child_sets,
                                                     std::optional<TypeId> extra) {
    std::vector<std::uint32_t> distinct = child_sets;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<TypeId> out(child_sets.size(), 0);
    if (m_ == 0) {
      for (std::size_t i = 0; i < child_sets.size(); ++i) {
        if (sets_[child_sets[i]].empty()) return std::nullopt;
        out[i] = sets_[child_sets[i]].front();
      }
      return out;
    }
    std::vector<ChildGroup> groups;
    for (auto id : distinct) {
      groups.push_back({projections(id), static_cast<std::uint32_t>(std::count(child_sets.begin(), child_sets.end(), id))});
    }
    if (extra) groups.push_back({{*extra}, 1});
    auto plan = fit_children(info(tau).children, groups, table_.cutoff());
    if (!plan) return std::nullopt;
    for (std::size_t g = 0; g < distinct.size(); ++g) {
      auto quota = (*plan)[g];
      for (std::size_t i = 0; i < child_sets.size(); ++i) {
        if (child_sets[i] != distinct[g]) continue;
        auto q = std::find_if(quota.begin(), quota.end(), [](const auto& x) { return x.second > 0; });
        const TypeId p = q->first;
        --q->second;
        for (TypeId c : sets_[distinct[g]]) {
          if (table_.project(c) == p) {
            out[i] = c;
            break;
          }
        }
      }
    }
    return out;
  }

 private:
  struct SigHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
      std::size_t h = 1469598103934665603ull;
      for (auto x : v) h = (h ^ x) * 1099511628211ull;
      return h;
    }
  };

  const std::vector<TypeId>& projections(std::uint32_t set_id) {
    if (auto it = proj_.find(set_id); it != proj_.end()) return it->second;
    std::vector<TypeId> p;
    for (TypeId t : sets_[set_id]) p.push_back(table_.project(t));
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return proj_.emplace(set_id, std::move(p)).first->second;
  }

  std::uint32_t intern_set(std::vector<TypeId> s) {
    if (auto it = set_index_.find(s); it != set_index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(sets_.size());
    sets_.push_back(s);
    set_index_.emplace(std::move(s), id);
    return id;
  }

  std::uint32_t node_set(bool is_root, std::vector<std::uint32_t> kids, std::optional<TypeId> extra) {
    std::sort(kids.begin(), kids.end());
    std::vector<std::uint32_t> key{is_root ? 1u : 0u, extra ? *extra + 1 : 0u};
    key.insert(key.end(), kids.begin(), kids.end());
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<TypeId> result;
    const bool dead = std::any_of(kids.begin(), kids.end(), [&](auto id) { return sets_[id].empty(); });
    if (!dead) {
      std::vector<ChildGroup> groups;
      for (std::size_t i = 0; m_ > 0 && i < kids.size();) {
        std::size_t j = i;
        while (j < kids.size() && kids[j] == kids[i]) ++j;
        groups.push_back({projections(kids[i]), static_cast<std::uint32_t>(j - i)});
        i = j;
      }
      if (extra) groups.push_back({{*extra}, 1});
      for (TypeId tau : candidates_) {
        const TypeEntry& e = info_.at(tau);
        if ((e.colour == kRootColour) != is_root) continue;
        if (m_ == 0 || fit_children(e.children, groups, table_.cutoff())) result.push_back(tau);
      }
    }
    const auto id = intern_set(std::move(result));
    memo_.emplace(std::move(key), id);
    return id;
  }

  TypeTable& table_;
  std::uint32_t m_;
  std::vector<TypeId> candidates_;
  std::unordered_map<TypeId, TypeEntry> info_;
  std::vector<std::vector<TypeId>> sets_;
  std::map<std::vector<TypeId>, std::uint32_t> set_index_;
  std::unordered_map<std::uint32_t, std::vector<TypeId>> proj_;
  std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, SigHash> memo_;
};

/// Ids of uncoloured subtree shapes: equal ids iff isomorphic subtrees.
inline std::vector<std::uint32_t> shape_ids(const RootedTree& t) {
  std::map<std::vector<std::uint32_t>, std::uint32_t> index;
  std::vector<std::uint32_t> out(t.size(), 0);
  const auto order = t.bfs_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::vector<std::uint32_t> kids;
    for (NodeId c : t.children(*it)) kids.push_back(out[c]);
    std::sort(kids.begin(), kids.end());
    out[*it] = index.emplace(std::move(kids), static_cast<std::uint32_t>(index.size())).first->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Census-matching colourings.

struct ReplySearchOptions {
  std::size_t max_solutions = 1;
  std::uint64_t step_budget = 5'000'000;
};

struct ReplySearchResult {
  std::vector<std::vector<Colour>> colourings;
  /// The search space was exhausted (no further solutions exist up to
  /// swapping isomorphic sibling subtrees).
  bool complete = false;
  std::uint64_t steps = 0;
};

namespace detail {

class CensusSearch {
 public:
  CensusSearch(const TypeCensus& target, const RootedTree& t, std::uint32_t m, TypeTable& table,
               ReplySearchOptions opts)
      : target_(target), t_(t), table_(table), opts_(opts), k_(table.cutoff()) {
    std::vector<TypeId> support;
    for (auto [ty, n] : target.counts) {
      if (n > 0) support.push_back(ty);
    }
    feasible_.emplace(table, support, m);
    sets_ = feasible_->compute(t);
    order_ = t.bfs_order();
    shapes_ = shape_ids(t);
    assigned_.assign(t.size(), kNone);
    for (TypeId ty : feasible_->candidates()) {
      need_[ty] = std::min(target.count(ty), k_);
      cnt_[ty] = 0;
      avail_[ty] = 0;
      colour_[ty] = feasible_->info(ty).colour;
    }
    for (NodeId v = 0; v < t.size(); ++v) {
      for (TypeId ty : feasible_->set(sets_[v])) ++avail_[ty];
    }
    // Children sorted so that isomorphic siblings are adjacent.
    kids_.resize(t.size());
    for (NodeId v = 0; v < t.size(); ++v) {
      auto span = t.children(v);
      kids_[v].assign(span.begin(), span.end());
      std::stable_sort(kids_[v].begin(), kids_[v].end(), [&](NodeId a, NodeId b) { return shapes_[a] < shapes_[b]; });
    }
  }

  ReplySearchResult run() {
    ReplySearchResult out;
    bool viable = true;
    for (auto [ty, n] : need_) viable = viable && avail_[ty] >= n;
    if (viable) {
      for (TypeId ty : feasible_->set(sets_[t_.root()])) {
        if (done()) break;
        if (!assign(t_.root(), ty)) {
          unassign(t_.root(), ty);
          continue;
        }
        node(0);
        unassign(t_.root(), ty);
      }
    }
    out.colourings = std::move(found_);
    out.complete = !done();
    out.steps = steps_;
    return out;
  }

 private:
  static constexpr TypeId kNone = std::numeric_limits<TypeId>::max();

  bool done() const { return found_.size() >= opts_.max_solutions; }

  void tick() {
    if (++steps_ > opts_.step_budget) {
      throw GuardExceeded("types-game reply search exceeded " + std::to_string(opts_.step_budget) + " steps");
    }
  }

  // Returns false if a census bound is already violated (state still
  // updated; caller undoes).
  bool assign(NodeId v, TypeId ty) {
    tick();
    assigned_[v] = ty;
    bool ok = true;
    ++cnt_[ty];
    for (TypeId o : feasible_->set(sets_[v])) {
      --avail_[o];
      if (cnt_[o] + avail_[o] < need_[o]) ok = false;
    }
    if (need_[ty] < k_ && cnt_[ty] > need_[ty]) ok = false;
    return ok;
  }

  void unassign(NodeId v, TypeId ty) {
    assigned_[v] = kNone;
    --cnt_[ty];
    for (TypeId o : feasible_->set(sets_[v])) ++avail_[o];
  }

  void node(std::size_t i) {
    if (done()) return;
    if (i == order_.size()) {
      record();
      return;
    }
    const NodeId v = order_[i];
    const TypeEntry& e = feasible_->info(assigned_[v]);
    std::map<TypeId, std::uint32_t> got;
    child(v, 0, e, got, i);
  }

  void child(NodeId v, std::size_t j, const TypeEntry& e, std::map<TypeId, std::uint32_t>& got, std::size_t i) {
    if (done()) return;
    const auto& kids = kids_[v];
    if (j == kids.size()) {
      if (feasible_->depth() > 0) {
        for (auto [p, need] : e.children) {
          const auto have = got.count(p) ? got[p] : 0u;
          if (need < k_ ? have != need : have < need) return;
        }
      }
      node(i + 1);
      return;
    }
    const NodeId c = kids[j];
    const std::size_t remaining = kids.size() - j - 1;
    const TypeId floor = (j > 0 && shapes_[kids[j - 1]] == shapes_[c]) ? assigned_[kids[j - 1]] : 0;
    for (TypeId ty : feasible_->set(sets_[c])) {
      if (done()) return;
      if (ty < floor) continue;
      TypeId p = 0;
      if (feasible_->depth() > 0) {
        p = table_.project(ty);
        auto it = std::find_if(e.children.begin(), e.children.end(), [&](const auto& x) { return x.first == p; });
        if (it == e.children.end()) continue;
        const auto have = got.count(p) ? got[p] : 0u;
        if (it->second < k_ && have + 1 > it->second) continue;
        // Children still to place must cover the remaining deficits.
        std::uint64_t deficit = 0;
        for (auto [q, need] : e.children) {
          const auto h = (got.count(q) ? got[q] : 0u) + (q == p ? 1u : 0u);
          if (h < need) deficit += need - h;
        }
        if (deficit > remaining) continue;
        ++got[p];
      }
      if (assign(c, ty)) child(v, j + 1, e, got, i);
      unassign(c, ty);
      if (feasible_->depth() > 0) --got[p];
    }
  }

  void record() {
    for (auto [ty, n] : need_) {
      if (std::min(cnt_[ty], k_) != n) return;
    }
    std::vector<Colour> colours(t_.size());
    for (NodeId v = 0; v < t_.size(); ++v) colours[v] = colour_[assigned_[v]];
    const TypeCensus check = census(ColouredTree{t_, colours}, feasible_->depth(), k_, table_);
    if (!(check == target_)) throw InvariantViolation("reply search produced a colouring with a different census");
    found_.push_back(std::move(colours));
  }

  const TypeCensus& target_;
  const RootedTree& t_;
  TypeTable& table_;
  ReplySearchOptions opts_;
  std::uint32_t k_;
  std::optional<FeasibleTypes> feasible_;
  std::vector<std::uint32_t> sets_;
  std::vector<NodeId> order_;
  std::vector<std::uint32_t> shapes_;
  std::vector<std::vector<NodeId>> kids_;
  std::vector<TypeId> assigned_;
  std::unordered_map<TypeId, std::uint32_t> need_, cnt_, avail_;
  std::unordered_map<TypeId, Colour> colour_;
  std::vector<std::vector<Colour>> found_;
  std::uint64_t steps_ = 0;
};

}  // namespace detail

/// Rooted colourings of the finite tree t whose depth-m census, capped at
/// the table's cutoff, equals `target`. Solutions differing only by swapping
/// isomorphic sibling subtrees are reported once.
inline ReplySearchResult search_census_colourings(const TypeCensus& target, const RootedTree& t, std::uint32_t m,
                                                  TypeTable& table, ReplySearchOptions opts = {}) {
  if (t.infinite()) throw InvalidArgument("reply search needs a finite tree");
  if (target.cap != table.cutoff()) throw InvalidArgument("census cap differs from the type cutoff");
  detail::CensusSearch search(target, t, m, table, opts);
  return search.run();
}

/// A Duplicator reply in the types game: a colouring of t2 with the same
/// capped census as (t1, its colouring), if one exists.
inline std::optional<std::vector<Colour>> find_types_game_reply(const ColouredTree& t1, const RootedTree& t2,
                                                                std::uint32_t m, TypeTable& table,
                                                                ReplySearchOptions opts = {}) {
  const TypeCensus target = census(t1, m, table.cutoff(), table);
  opts.max_solutions = 1;
  auto r = search_census_colourings(target, t2, m, table, opts);
  if (r.colourings.empty()) return std::nullopt;
  return r.colourings.front();
}

}  // namespace ehrlab
