#pragma once

// The pair of trees used against the types game: T1 is a path phi -> w_1 ->
// ... -> w_L whose last node carries k * N(T(S)) copies of a witness T(S) for
// every S in Q; T2 is the same with one more child v of z_L carrying an
// infinite tree t2. Also Duplicator's colouring of T2 in reply to a colouring
// of T1, and Galton-Watson sampling.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/deficiency.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/games.hpp"
#include "ehrlab/literal.hpp"
#include "ehrlab/tree.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

using BigInt = boost::multiprecision::cpp_int;

/// N(T): colourings of T avoiding c0, i.e. r^|V(T)|.
inline BigInt count_colourings_N(const RootedTree& t, const Palette& p) {
  if (t.infinite()) throw InvalidArgument("N(T) needs a finite tree");
  return boost::multiprecision::pow(BigInt(p.r), static_cast<unsigned>(t.size()));
}

struct ConstructionPlan {
  std::uint32_t L = 1;
  std::uint32_t k = 1;
  std::uint32_t m = 1;
  Palette palette{2};
  std::vector<QEntry> q;

  /// Checks L >= 1, the table cutoff, and that every witness is deficient
  /// for its set.
  void validate(TypeTable& table) const {
    if (L < 1) throw InvalidArgument("path length L must be >= 1");
    if (table.cutoff() != k) throw InvalidArgument("type table cutoff differs from the plan's k");
    for (const auto& e : q) {
      if (e.witness.infinite()) throw InvalidArgument("witness trees must be finite");
      for (std::size_t v = 1; v < e.witness.size(); ++v) {
        if (*e.witness.parent(static_cast<NodeId>(v)) >= v) throw InvalidArgument("witness arena is not parent-first");
      }
      if (!deficient_by_propagation(e.types, e.witness, palette, m, table)) {
        throw InvalidArgument("witness " + canonical_shape(e.witness) + " is not deficient for its set");
      }
    }
  }
};

struct ConstructionOptions {
  std::uint64_t max_nodes = 2'000'000;
};

/// A built T1 or T2 with the positions of its parts. Copy j of entry s
/// occupies arena ids copies[s][j] .. copies[s][j] + |T(S)| - 1, witness
/// node i at copies[s][j] + i.
struct Construction {
  RootedTree tree;
  /// path[0] is the root, path[i] is w_i (or z_i).
  std::vector<NodeId> path;
  std::vector<std::vector<NodeId>> copies;
  /// The extra child of z_L; T2 only.
  std::optional<NodeId> v;

  NodeId top() const { return path.back(); }
};

inline BigInt construction_size(const ConstructionPlan& plan) {
  BigInt n = 1 + plan.L;
  for (const auto& e : plan.q) n += plan.k * count_colourings_N(e.witness, plan.palette) * e.witness.size();
  return n;
}

inline Construction build_T1(const ConstructionPlan& plan, ConstructionOptions opts = {}) {
  if (plan.L < 1) throw InvalidArgument("path length L must be >= 1");
  if (const BigInt n = construction_size(plan); n > opts.max_nodes) {
    throw GuardExceeded("T1 would have " + n.str() + " nodes, above the budget of " + std::to_string(opts.max_nodes));
  }
  Construction c;
  c.path.push_back(c.tree.root());
  for (std::uint32_t i = 1; i <= plan.L; ++i) c.path.push_back(c.tree.add_child(c.path.back()));
  for (const auto& e : plan.q) {
    const auto copies = static_cast<std::uint64_t>(plan.k * count_colourings_N(e.witness, plan.palette));
    auto& roots = c.copies.emplace_back();
    for (std::uint64_t j = 0; j < copies; ++j) {
      const NodeId base = c.tree.add_child(c.top());
      roots.push_back(base);
      for (NodeId w = 1; w < e.witness.size(); ++w) c.tree.add_child(base + *e.witness.parent(w));
    }
  }
  return c;
}

/// The single-node tree with a period-1 lasso: the infinite path.
inline RootedTree infinite_path() {
  RootedTree t;
  t.set_lasso(Lasso{t.root(), {1}});
  return t;
}

inline Construction build_T2(const ConstructionPlan& plan, const RootedTree& t2, ConstructionOptions opts = {}) {
  if (!t2.infinite()) throw InvalidArgument("t2 must be infinite (a lasso tree)");
  if (const BigInt n = construction_size(plan) + t2.size(); n > opts.max_nodes) {
    throw GuardExceeded("T2 would have " + n.str() + " nodes, above the budget of " + std::to_string(opts.max_nodes));
  }
  Construction c = build_T1(plan, opts);
  const NodeId v = c.tree.add_child(c.top());
  c.v = v;
  for (NodeId w = 1; w < t2.size(); ++w) c.tree.add_child(v + *t2.parent(w));
  c.tree.set_lasso(Lasso{v + t2.lasso()->attach_leaf, t2.lasso()->period_colours});
  return c;
}

// ---------------------------------------------------------------------------
// Duplicator's reply.

struct Justification {
  bool copies_isomorphic = true;
  /// For the type of v and every other type below v: at least k nodes under
  /// w_L in T1, at least k+1 under z_L in T2.
  bool eta_counts = true;
  /// w_L and z_L at depth m+1, and w_i, z_i at depth m for every i.
  bool top_equal = true;
  bool path_equal = true;
  std::vector<std::string> failures;

  bool ok() const { return copies_isomorphic && eta_counts && top_equal && path_equal; }
};

struct TypesResponse {
  /// False when no colouring of t2 into X exists (Step 1 failed).
  bool found = false;
  std::string failure;
  /// T2 with Duplicator's colouring; arena ids agree with build_T2 and the
  /// tail may have a few nodes made explicit.
  ColouredTree t2;
  /// Per entry, the repeated colouring of T(S) (sigma_S), root included.
  std::vector<std::vector<Colour>> sigma;
  TypeSet x;
  std::size_t s0 = 0;
  Colour v_colour = 0;
};

namespace detail {

inline void check_pair(const ConstructionPlan& plan, const Construction& c1, const Construction& c2) {
  if (c2.path != c1.path || c2.copies != c1.copies || !c2.v || *c2.v != c1.tree.size() || c1.v) {
    throw InvalidArgument("T1 and T2 do not come from the same plan");
  }
  if (c1.copies.size() != plan.q.size()) throw InvalidArgument("construction does not match the plan");
}

/// Types of the nodes of (T(S), colours), memoized by witness shape and
/// colouring.
class WitnessTypes {
 public:
  WitnessTypes(std::uint32_t m, TypeTable& table) : m_(m), table_(table) {}

  const std::vector<TypeId>& of(const RootedTree& w, const std::vector<Colour>& colours) {
    std::string key = canonical_shape(w) + '|';
    for (Colour c : colours) key += std::to_string(c) + ',';
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    return memo_.emplace(key, compute_types(ColouredTree{w, colours}, m_, table_).nodes).first->second;
  }

 private:
  std::uint32_t m_;
  TypeTable& table_;
  std::unordered_map<std::string, std::vector<TypeId>> memo_;
};

}  // namespace detail

/// Duplicator's colouring of T2 against Spoiler's colouring sigma1 of T1:
/// copy sigma1 onto the path and the copies, colour T2(v) with types from
/// X = union of the type sets of the recoloured repeated copies, then give v
/// the root colour of the matching copy.
inline TypesResponse types_game_response(const ConstructionPlan& plan, const Construction& c1,
                                         const std::vector<Colour>& sigma1, const Construction& c2, TypeTable& table,
                                         SColouringOptions search = {}) {
  detail::check_pair(plan, c1, c2);
  if (table.cutoff() != plan.k) throw InvalidArgument("type table cutoff differs from the plan's k");
  require_rooted(ColouredTree{c1.tree, sigma1}, plan.palette);
  TypesResponse out;
  detail::WitnessTypes wt(plan.m, table);

  // (i)-(iii): a colouring repeated k times per S, its root recoloured c0, and
  // the union of the resulting type sets.
  std::vector<TypeId> x;
  std::vector<TypeId> root_types;
  for (std::size_t s = 0; s < plan.q.size(); ++s) {
    const RootedTree& w = plan.q[s].witness;
    std::map<std::vector<Colour>, std::uint32_t> seen;
    std::optional<std::vector<Colour>> chosen;
    for (NodeId base : c1.copies[s]) {
      std::vector<Colour> col(sigma1.begin() + base, sigma1.begin() + base + w.size());
      if (++seen[col] >= plan.k) {
        chosen = std::move(col);
        break;
      }
    }
    if (!chosen) throw InvariantViolation("no colouring of copy set " + std::to_string(s) + " repeats k times");
    auto tilde = *chosen;
    tilde[0] = kRootColour;
    const auto& types = wt.of(w, tilde);
    x.insert(x.end(), types.begin(), types.end());
    root_types.push_back(types[0]);
    out.sigma.push_back(std::move(*chosen));
  }
  out.x = make_type_set(std::move(x));

  // (iv): the path and the copies are copied verbatim.
  const NodeId v = *c2.v;
  out.t2.tree = c1.tree;
  out.t2.colours = sigma1;

  // Step 1: T2(v) coloured into X.
  RootedTree t2_shape;
  for (NodeId u = v + 1; u < c2.tree.size(); ++u) t2_shape.add_child(*c2.tree.parent(u) - v);
  t2_shape.set_lasso(Lasso{c2.tree.lasso()->attach_leaf - v, c2.tree.lasso()->period_colours});
  const auto step1 = find_S_colouring(out.x, t2_shape, plan.palette, plan.m, table, search);
  if (!step1) {
    out.failure = "no rooted colouring of t2 has all its types in X (" + std::to_string(out.x.size()) + " types)";
    return out;
  }
  // Step 2: v's type gamma is the type of some witness root under the
  // recoloured copy; v takes that copy's root colour instead of c0.
  const TypeId gamma = compute_types(*step1, plan.m, table).nodes[0];
  auto hit = std::find(root_types.begin(), root_types.end(), gamma);
  if (hit == root_types.end()) throw InvariantViolation("type of v is not the root type of any recoloured copy");
  out.s0 = static_cast<std::size_t>(hit - root_types.begin());
  out.v_colour = out.sigma[out.s0][0];

  // Graft in t2's arena order so ids agree with build_T2.
  out.t2.add_child(c1.top(), out.v_colour);
  for (NodeId w = 1; w < step1->size(); ++w) out.t2.add_child(v + *step1->tree.parent(w), step1->colours[w]);
  out.t2.tree.set_lasso(Lasso{v + step1->tree.lasso()->attach_leaf, step1->tree.lasso()->period_colours});
  out.found = true;
  return out;
}

/// The three-case argument for a reply, checked on the actual trees.
inline Justification check_justification(const ConstructionPlan& plan, const Construction& c1,
                                         const std::vector<Colour>& sigma1, const Construction& c2,
                                         const ColouredTree& t2, TypeTable& table) {
  detail::check_pair(plan, c1, c2);
  Justification j;
  const NodeId v = *c2.v;
  const ColouredTree t1{c1.tree, sigma1};
  for (std::size_t s = 0; s < plan.q.size(); ++s) {
    const std::size_t n = plan.q[s].witness.size();
    for (NodeId base : c1.copies[s]) {
      bool same = true;
      for (std::size_t i = 0; i < n && same; ++i) {
        same = t2.colours[base + i] == sigma1[base + i] && t2.tree.parent(static_cast<NodeId>(base + i)) ==
                                                               c1.tree.parent(static_cast<NodeId>(base + i));
      }
      if (!same) {
        j.copies_isomorphic = false;
        j.failures.push_back("copy at " + std::to_string(base) + " differs");
      }
    }
  }

  const auto a1 = compute_types(t1, plan.m, table);
  const auto a2 = compute_types(t2, plan.m, table);
  // Counts below the top node; the tail sits under v and counts as unbounded.
  const NodeId top = c1.top();
  const std::uint32_t cap = plan.k + 1;
  std::map<TypeId, std::uint32_t> m1, m2;
  for (NodeId u = top + 1; u < a1.nodes.size(); ++u) m1[a1.nodes[u]] = std::min(cap, m1[a1.nodes[u]] + 1);
  for (NodeId u = top + 1; u < a2.nodes.size(); ++u) m2[a2.nodes[u]] = std::min(cap, m2[a2.nodes[u]] + 1);
  for (TypeId t : a2.tail) m2[t] = cap;
  std::vector<TypeId> below_v;
  for (NodeId u = v; u < a2.nodes.size(); ++u) below_v.push_back(a2.nodes[u]);
  below_v.insert(below_v.end(), a2.tail.begin(), a2.tail.end());
  for (TypeId eta : make_type_set(below_v)) {
    if (m1[eta] < plan.k || m2[eta] < plan.k + 1) {
      j.eta_counts = false;
      j.failures.push_back("type " + table.canonical(eta) + (eta == a2.nodes[v] ? " (of v)" : "") +
                           " occurs " + std::to_string(m1[eta]) + " times under w_L and " + std::to_string(m2[eta]) +
                           " under z_L");
    }
  }

  auto above = [&](const ColouredTree& t, const TypeAssignment& a, NodeId u) {
    std::vector<TypeId> kids;
    for (NodeId c : t.tree.children(u)) kids.push_back(a.nodes[c]);
    if (t.tree.lasso() && t.tree.lasso()->attach_leaf == u) kids.push_back(a.tail[0]);
    return detail::intern_capped(table, plan.m + 1, t.colours[u], std::move(kids));
  };
  if (above(t1, a1, top) != above(t2, a2, top)) {
    j.top_equal = false;
    j.failures.push_back("w_L and z_L have different depth-(m+1) types");
  }
  for (std::size_t i = 0; i < c1.path.size(); ++i) {
    if (a1.nodes[c1.path[i]] != a2.nodes[c2.path[i]]) {
      j.path_equal = false;
      j.failures.push_back("path node " + std::to_string(i) + " types differ");
    }
  }
  return j;
}

struct ResponseAudit {
  bool found = false;
  bool rooted = false;
  bool wins = false;
  Justification justification;
  std::string failure;

  bool ok() const { return found && rooted && wins && justification.ok(); }
};

/// Builds Duplicator's reply to sigma1 and checks it: a rooted colouring
/// that wins the types game, with all three justification checks passing.
inline ResponseAudit audit_response(const ConstructionPlan& plan, const Construction& c1,
                                    const std::vector<Colour>& sigma1, const Construction& c2, TypeTable& table) {
  ResponseAudit a;
  const auto r = types_game_response(plan, c1, sigma1, c2, table);
  a.found = r.found;
  if (!r.found) {
    a.failure = r.failure;
    return a;
  }
  a.rooted = is_rooted(r.t2, plan.palette);
  a.justification = check_justification(plan, c1, sigma1, c2, r.t2, table);
  const auto v = types_game_verdict(ColouredTree{c1.tree, sigma1}, r.t2, plan.palette, plan.m, plan.k, table);
  a.wins = v.duplicator_wins();
  if (!a.rooted) {
    a.failure = "reply is not a rooted colouring";
  } else if (!a.wins) {
    a.failure = "reply loses the types game: " + (v.witness.empty() ? std::string() : v.witness.front());
  } else if (!a.justification.ok()) {
    a.failure = a.justification.failures.empty() ? "justification failed" : a.justification.failures.front();
  }
  return a;
}

// ---------------------------------------------------------------------------
// Plan files: a header, the Q_B manifest path, and t2 as a literal.

struct PlanFile {
  std::uint32_t L = 1;
  std::string q_manifest;
  std::string t2 = "c0@[c1]";
};

inline void write_plan(std::ostream& os, const PlanFile& p) {
  os << "# ehrlab plan L=" << p.L << '\n' << "Q=" << p.q_manifest << '\n' << "t2=" << p.t2 << '\n';
}

inline PlanFile read_plan(std::istream& in) {
  PlanFile p;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ehrlab plan L=", 0) != 0) throw ParseError("not a plan file", 0);
  try {
    p.L = static_cast<std::uint32_t>(std::stoul(line.substr(16)));
  } catch (const std::exception&) {
    throw ParseError("bad L", 16);
  }
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.rfind("Q=", 0) == 0) {
      p.q_manifest = line.substr(2);
    } else if (line.rfind("t2=", 0) == 0) {
      p.t2 = line.substr(3);
    } else if (!line.empty() && line[0] != '#') {
      throw ParseError("unknown plan line", offset);
    }
    offset += line.size() + 1;
  }
  if (p.q_manifest.empty()) throw ParseError("plan lacks a Q= line", offset);
  return p;
}

// ---------------------------------------------------------------------------
// Galton-Watson trees.

class OffspringLaw {
 public:
  enum class Kind { Poisson, Geometric, Explicit };

  static OffspringLaw poisson(double lambda) {
    if (!(lambda > 0)) throw InvalidArgument("Poisson rate must be positive");
    return OffspringLaw(Kind::Poisson, lambda, {});
  }
  /// P(n) = p (1 - p)^n for n >= 0.
  static OffspringLaw geometric(double p) {
    if (!(p > 0 && p <= 1)) throw InvalidArgument("geometric parameter must lie in (0, 1]");
    return OffspringLaw(Kind::Geometric, p, {});
  }
  static OffspringLaw explicit_pmf(std::vector<double> pmf) {
    if (pmf.empty()) throw InvalidArgument("empty pmf");
    double sum = 0;
    for (double x : pmf) {
      if (!(x >= 0)) throw InvalidArgument("pmf entries must be non-negative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("pmf sums to " + std::to_string(sum) + ", not 1");
    return OffspringLaw(Kind::Explicit, 0, std::move(pmf));
  }

  /// Parses "poisson:2", "geometric:0.5" or "pmf:0.2,0.3,0.5".
  static OffspringLaw parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("expected kind:parameters", 0);
    const std::string kind = text.substr(0, colon);
    std::vector<double> nums;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        nums.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + item + "'", colon + 1);
      }
    }
    if (kind == "poisson" && nums.size() == 1) return poisson(nums[0]);
    if (kind == "geometric" && nums.size() == 1) return geometric(nums[0]);
    if (kind == "pmf" && !nums.empty()) return explicit_pmf(nums);
    throw ParseError("unknown law '" + text + "'", 0);
  }

  Kind kind() const noexcept { return kind_; }
  /// Whether every n >= 0 has positive probability.
  bool full_support() const {
    if (kind_ == Kind::Explicit) return false;
    return kind_ == Kind::Poisson || param_ < 1;
  }

  double pmf(std::uint64_t n) const {
    switch (kind_) {
      case Kind::Poisson:
        return std::exp(-param_ + static_cast<double>(n) * std::log(param_) - std::lgamma(static_cast<double>(n) + 1));
      case Kind::Geometric:
        return param_ * std::pow(1 - param_, static_cast<double>(n));
      case Kind::Explicit:
        return n < pmf_.size() ? pmf_[n] : 0.0;
    }
    return 0;
  }

  template <class Rng>
  std::uint64_t sample(Rng& rng) const {
    switch (kind_) {
      case Kind::Poisson:
        return std::poisson_distribution<std::uint64_t>(param_)(rng);
      case Kind::Geometric:
        return param_ >= 1 ? 0 : std::geometric_distribution<std::uint64_t>(param_)(rng);
      case Kind::Explicit:
        return std::discrete_distribution<std::uint64_t>(pmf_.begin(), pmf_.end())(rng);
    }
    return 0;
  }

  std::string str() const {
    std::ostringstream os;
    os << std::setprecision(17);
    switch (kind_) {
      case Kind::Poisson:
        os << "poisson:" << param_;
        break;
      case Kind::Geometric:
        os << "geometric:" << param_;
        break;
      case Kind::Explicit:
        os << "pmf:";
        for (std::size_t i = 0; i < pmf_.size(); ++i) os << (i ? "," : "") << pmf_[i];
        break;
    }
    return os.str();
  }

 private:
  OffspringLaw(Kind k, double p, std::vector<double> pmf) : kind_(k), param_(p), pmf_(std::move(pmf)) {}

  Kind kind_;
  double param_;
  std::vector<double> pmf_;
};

struct GwOptions {
  std::uint64_t max_nodes = 1'000'000;
};

/// GW tree truncated at max_depth, generated breadth first from rng.
template <class Rng>
RootedTree gw_sample(const OffspringLaw& law, std::uint32_t max_depth, Rng& rng, GwOptions opts = {}) {
  RootedTree t;
  for (NodeId i = 0; i < t.size(); ++i) {
    if (t.depth(i) >= max_depth) continue;
    const std::uint64_t n = law.sample(rng);
    if (t.size() + n > opts.max_nodes) {
      throw GuardExceeded("GW sample exceeded " + std::to_string(opts.max_nodes) + " nodes at depth " +
                          std::to_string(t.depth(i) + 1));
    }
    for (std::uint64_t c = 0; c < n; ++c) t.add_child(i);
  }
  return t;
}

inline RootedTree gw_sample(const OffspringLaw& law, std::uint32_t max_depth, std::uint64_t seed, GwOptions opts = {}) {
  std::mt19937_64 rng(seed);
  return gw_sample(law, max_depth, rng, opts);
}

struct TruncationEstimate {
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double estimate = 0;
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval for hits out of n at normal quantile z.
inline std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t n, double z) {
  if (n == 0) return {0, 1};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Monte Carlo estimate of P(T|_n is isomorphic to target) with a Wilson
/// interval. A target deeper than n is impossible and gives 0 without
/// sampling.
inline TruncationEstimate estimate_truncation_probability(const OffspringLaw& law, const RootedTree& target,
                                                          std::uint32_t n, std::uint64_t samples, std::uint64_t seed,
                                                          double z = 1.96) {
  if (target.infinite()) throw InvalidArgument("target must be finite");
  TruncationEstimate out;
  out.samples = samples;
  if (target.height() > n) return out;
  const std::string want = canonical_shape(target);
  const std::size_t want_size = target.size();
  // A sample is abandoned as soon as it outgrows the target.
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < samples; ++i) {
    RootedTree t;
    bool too_big = false;
    for (NodeId v = 0; v < t.size() && !too_big; ++v) {
      if (t.depth(v) >= n) continue;
      const std::uint64_t c = law.sample(rng);
      if (t.size() + c > want_size) {
        too_big = true;
        break;
      }
      for (std::uint64_t j = 0; j < c; ++j) t.add_child(v);
    }
    if (!too_big && t.size() == want_size && canonical_shape(t) == want) ++out.hits;
  }
  out.estimate = samples ? static_cast<double>(out.hits) / static_cast<double>(samples) : 0.0;
  std::tie(out.lo, out.hi) = wilson_interval(out.hits, samples, z);
  return out;
}

inline std::string estimate_record(const OffspringLaw& law, const RootedTree& target, std::uint32_t n,
                                   const TruncationEstimate& e) {
  std::ostringstream os;
  os << std::setprecision(6) << "law=" << law.str() << " target=" << canonical_shape(target) << " n=" << n
     << " samples=" << e.samples << " hits=" << e.hits << " estimate=" << e.estimate << " ci=[" << e.lo << ','
     << e.hi << ']';
  return os.str();
}

}  // namespace ehrlab
