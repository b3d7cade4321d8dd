#pragma once

// Sets of depth-m types that a tree can or cannot be coloured into. A set S
// is deficient for T when no rooted colouring of T gives every node a type
// in S; Q_B collects the sets with a deficient witness of at most B nodes.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ehrlab/colouring.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/literal.hpp"
#include "ehrlab/tree.hpp"
#include "ehrlab/type_search.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

/// Sorted, duplicate-free list of depth-m types.
using TypeSet = std::vector<TypeId>;

inline TypeSet make_type_set(std::vector<TypeId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool contains(const TypeSet& s, TypeId t) { return std::binary_search(s.begin(), s.end(), t); }

/// Whether every colour inside the type lies in 0..r and no child carries c0.
inline bool within_palette(TypeId t, const Palette& p, const TypeTable& table, bool as_child = false) {
  const TypeEntry& e = table.entry(t);
  if (!p.contains(e.colour) || (as_child && e.colour == kRootColour)) return false;
  for (auto [c, n] : e.children) {
    if (!within_palette(c, p, table, true)) return false;
  }
  return true;
}

/// Gamma(Sigma, m, k): every depth-m type some node of some finite rooted
/// colouring can carry. Level 0 is the colours; level j pairs a colour with
/// any capped count vector over the non-root level-(j-1) types.
inline TypeSet realizable_types(const Palette& p, std::uint32_t m, TypeTable& table, std::size_t max_types = 1u << 20) {
  const std::uint32_t k = table.cutoff();
  std::vector<TypeId> level;
  for (Colour c = 0; c <= p.r; ++c) level.push_back(table.intern(0, c, {}));
  for (std::uint32_t j = 1; j <= m; ++j) {
    std::vector<TypeId> kids;
    for (TypeId t : level) {
      if (table.entry(t).colour != kRootColour) kids.push_back(t);
    }
    double total = p.r + 1.0;
    for (std::size_t i = 0; i < kids.size(); ++i) total *= k + 1.0;
    if (total > static_cast<double>(max_types)) {
      throw GuardExceeded("type universe at depth " + std::to_string(j) + " has " + std::to_string(total) + " members");
    }
    std::vector<TypeId> next;
    std::vector<std::uint32_t> counts(kids.size(), 0);
    for (;;) {
      std::vector<std::pair<TypeId, std::uint32_t>> ch;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (counts[i]) ch.emplace_back(kids[i], counts[i]);
      }
      for (Colour c = 0; c <= p.r; ++c) next.push_back(table.intern(j, c, ch));
      std::size_t i = 0;
      while (i < counts.size() && counts[i] == k) counts[i++] = 0;
      if (i == counts.size()) break;
      ++counts[i];
    }
    level = std::move(next);
  }
  return make_type_set(std::move(level));
}

namespace detail {

inline void check_type_set(const TypeSet& s, std::uint32_t m, const TypeTable& table) {
  for (TypeId t : s) {
    if (table.entry(t).level != m) throw InvalidArgument("type set member " + table.canonical(t) + " has the wrong depth");
  }
}

inline TypeId intern_capped(TypeTable& table, std::uint32_t level, Colour c, std::vector<TypeId> kids) {
  std::sort(kids.begin(), kids.end());
  std::vector<std::pair<TypeId, std::uint32_t>> counts;
  for (std::size_t i = 0; i < kids.size();) {
    std::size_t j = i;
    while (j < kids.size() && kids[j] == kids[i]) ++j;
    counts.emplace_back(kids[i], std::min<std::uint32_t>(static_cast<std::uint32_t>(j - i), table.cutoff()));
    i = j;
  }
  return table.intern(level, c, std::move(counts));
}

}  // namespace detail

struct DeficiencyOptions {
  /// Largest number of rooted colourings an exhaustive search may visit.
  std::uint64_t max_colourings = 1ull << 24;
};

/// Exhaustive search over rooted colourings of a finite tree. Nodes are
/// coloured deepest first, so a node's depth-m type is known as soon as it is
/// coloured and the branch is abandoned when that type is outside S.
inline bool is_deficient(const TypeSet& s, const RootedTree& t, const Palette& p, std::uint32_t m, TypeTable& table,
                         DeficiencyOptions opts = {}) {
  if (t.infinite()) throw InvalidArgument("is_deficient needs a finite tree");
  detail::check_type_set(s, m, table);
  if (rooted_colouring_count(t.size(), p) > opts.max_colourings) {
    throw GuardExceeded("rooted colourings of a " + std::to_string(t.size()) + "-node tree exceed the budget");
  }
  std::vector<NodeId> order = t.bfs_order();
  std::reverse(order.begin(), order.end());
  std::vector<std::vector<TypeId>> types(t.size(), std::vector<TypeId>(m + 1, 0));
  auto fill = [&](NodeId v, Colour c) {
    types[v][0] = table.intern(0, c, {});
    for (std::uint32_t j = 1; j <= m; ++j) {
      std::vector<TypeId> kids;
      for (NodeId ch : t.children(v)) kids.push_back(types[ch][j - 1]);
      types[v][j] = detail::intern_capped(table, j, c, std::move(kids));
    }
    return contains(s, types[v][m]);
  };
  auto rec = [&](auto&& self, std::size_t i) -> bool {
    const NodeId v = order[i];
    if (v == t.root()) return fill(v, kRootColour);
    for (Colour c = 1; c <= p.r; ++c) {
      if (fill(v, c) && self(self, i + 1)) return true;
    }
    return false;
  };
  return !rec(rec, 0);
}

/// Same verdict as is_deficient, decided by propagating feasible type sets
/// bottom-up; polynomial in the tree size.
inline bool deficient_by_propagation(const TypeSet& s, const RootedTree& t, const Palette& p, std::uint32_t m,
                                     TypeTable& table) {
  if (t.infinite()) throw InvalidArgument("deficient_by_propagation needs a finite tree");
  detail::check_type_set(s, m, table);
  std::vector<TypeId> cand;
  for (TypeId x : s) {
    if (within_palette(x, p, table)) cand.push_back(x);
  }
  FeasibleTypes f(table, cand, m);
  const auto sets = f.compute(t);
  return f.set(sets[t.root()]).empty();
}

/// Whether every rooted colouring of t gives some node a type in U. Plain
/// enumeration without pruning.
inline bool is_unavoidable(const TypeSet& u, const RootedTree& t, const Palette& p, std::uint32_t m, TypeTable& table,
                           DeficiencyOptions opts = {}) {
  if (t.infinite()) throw InvalidArgument("is_unavoidable needs a finite tree");
  detail::check_type_set(u, m, table);
  if (rooted_colouring_count(t.size(), p) > opts.max_colourings) {
    throw GuardExceeded("rooted colourings of a " + std::to_string(t.size()) + "-node tree exceed the budget");
  }
  bool all_hit = true;
  for_each_rooted_colouring(t, p, [&](const std::vector<Colour>& c) {
    if (!all_hit) return;
    const auto types = compute_types(ColouredTree{t, c}, m, table);
    all_hit = std::any_of(types.nodes.begin(), types.nodes.end(), [&](TypeId x) { return contains(u, x); });
  });
  return all_hit;
}

inline TypeSet complement(const TypeSet& s, const TypeSet& universe) {
  TypeSet out;
  std::set_difference(universe.begin(), universe.end(), s.begin(), s.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------
// Witness search.

/// Uncoloured shapes with n nodes, ordered by canonical_shape.
inline std::vector<RootedTree> shapes_in_canonical_order(std::size_t n) {
  auto shapes = enumerate_shapes(n);
  std::vector<std::pair<std::string, std::size_t>> keys;
  for (std::size_t i = 0; i < shapes.size(); ++i) keys.emplace_back(canonical_shape(shapes[i]), i);
  std::sort(keys.begin(), keys.end());
  std::vector<RootedTree> out;
  for (auto& [key, i] : keys) out.push_back(shapes[i]);
  return out;
}

struct DeficiencyCertificate {
  bool deficient = false;
  /// Smallest deficient tree, ties broken by canonical_shape.
  std::optional<RootedTree> witness;
  /// Trees up to this many nodes were searched.
  std::size_t bound = 0;
};

namespace detail {

inline DeficiencyCertificate certify(const TypeSet& s, const RootedTree& w, std::size_t bound, const Palette& p,
                                     std::uint32_t m, TypeTable& table) {
  bool ok;
  try {
    ok = is_deficient(s, w, p, m, table);
  } catch (const GuardExceeded&) {
    ok = deficient_by_propagation(s, w, p, m, table);
  }
  if (!ok) throw InvariantViolation("witness " + canonical_shape(w) + " failed verification");
  return {true, w, bound};
}

}  // namespace detail

inline DeficiencyCertificate find_witness(const TypeSet& s, std::size_t bound, const Palette& p, std::uint32_t m,
                                          TypeTable& table) {
  detail::check_type_set(s, m, table);
  for (std::size_t n = 1; n <= bound; ++n) {
    for (const auto& shape : shapes_in_canonical_order(n)) {
      if (deficient_by_propagation(s, shape, p, m, table)) return detail::certify(s, shape, bound, p, m, table);
    }
  }
  return {false, std::nullopt, bound};
}

struct QEntry {
  TypeSet types;
  RootedTree witness;
};

struct QOptions {
  std::uint64_t max_subsets = 1ull << 16;
};

inline std::vector<std::string> canonical_names(const TypeSet& s, const TypeTable& table) {
  std::vector<std::string> out;
  for (TypeId t : s) out.push_back(table.canonical(t));
  std::sort(out.begin(), out.end());
  return out;
}

/// Q_B: every subset of Gamma(Sigma, m, k) with a deficient witness of at most
/// B nodes, each with its smallest witness. Sorted by the sorted list of
/// canonical type strings.
inline std::vector<QEntry> enumerate_Q(const Palette& p, std::uint32_t m, std::size_t bound, TypeTable& table,
                                       QOptions opts = {}) {
  const TypeSet gamma = realizable_types(p, m, table);
  if (gamma.size() >= 63 || (1ull << gamma.size()) > opts.max_subsets) {
    throw GuardExceeded("2^" + std::to_string(gamma.size()) + " subsets of the type universe exceed the budget");
  }
  std::vector<RootedTree> shapes;
  for (std::size_t n = 1; n <= bound; ++n) {
    for (auto& s : shapes_in_canonical_order(n)) shapes.push_back(std::move(s));
  }
  std::vector<std::pair<std::vector<std::string>, QEntry>> found;
  for (std::uint64_t mask = 0; mask < (1ull << gamma.size()); ++mask) {
    TypeSet s;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      if (mask >> i & 1) s.push_back(gamma[i]);
    }
    for (const auto& shape : shapes) {
      if (deficient_by_propagation(s, shape, p, m, table)) {
        detail::certify(s, shape, bound, p, m, table);
        found.emplace_back(canonical_names(s, table), QEntry{s, shape});
        break;
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<QEntry> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

// ---------------------------------------------------------------------------
// Text forms.

namespace detail {

class TypeParser {
 public:
  TypeParser(std::string_view text, TypeTable& table) : text_(text), table_(table) {}

  TypeId parse(std::uint32_t level) {
    const TypeId t = type(level);
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  TypeId type(std::uint32_t level) {
    expect('c');
    const Colour c = number();
    if (level == 0) return table_.intern(0, c, {});
    expect('[');
    std::vector<std::pair<TypeId, std::uint32_t>> kids;
    if (peek() != ']') {
      for (;;) {
        const TypeId child = type(level - 1);
        expect('*');
        const std::size_t at = pos_;
        const std::uint32_t n = number();
        if (n < 1 || n > table_.cutoff()) {
          pos_ = at;
          fail("child count outside 1..k");
        }
        kids.emplace_back(child, n);
        if (peek() != ',') break;
        ++pos_;
      }
    }
    expect(']');
    std::sort(kids.begin(), kids.end());
    for (std::size_t i = 1; i < kids.size(); ++i) {
      if (kids[i].first == kids[i - 1].first) fail("repeated child type");
    }
    return table_.intern(level, c, std::move(kids));
  }

  std::uint32_t number() {
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("expected a number");
    std::uint64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + static_cast<std::uint64_t>(text_[pos_++] - '0');
      if (v > 0xFFFFFFFFull) fail("number too large");
    }
    return static_cast<std::uint32_t>(v);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  std::string_view text_;
  TypeTable& table_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Inverse of the canonical type string; the depth must be supplied since
/// "c1[]" reads the same at every positive depth.
inline TypeId parse_type(std::string_view text, std::uint32_t level, TypeTable& table) {
  return detail::TypeParser(text, table).parse(level);
}

/// Inverse of canonical_shape.
inline RootedTree parse_shape(std::string_view text) {
  RootedTree t;
  if (text.empty() || text.front() != '(') throw ParseError("expected '('", 0);
  std::vector<NodeId> stack{t.root()};
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (stack.empty()) throw ParseError("trailing characters", i);
    if (text[i] == '(') {
      stack.push_back(t.add_child(stack.back()));
    } else if (text[i] == ')') {
      stack.pop_back();
    } else {
      throw ParseError("expected '(' or ')'", i);
    }
  }
  if (!stack.empty()) throw ParseError("unbalanced shape", text.size());
  return t;
}

struct QManifest {
  std::uint32_t r = 1;
  std::uint32_t m = 0;
  std::uint32_t k = 1;
  std::size_t bound = 0;
  std::vector<QEntry> entries;
};

inline void write_manifest(std::ostream& os, const QManifest& q, const TypeTable& table) {
  os << "# ehrlab Q_B manifest r=" << q.r << " m=" << q.m << " k=" << q.k << " B=" << q.bound << '\n';
  for (const auto& e : q.entries) {
    os << "S=";
    const auto names = canonical_names(e.types, table);
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? " " : "") << names[i];
    os << " ; T=" << canonical_shape(e.witness) << '\n';
  }
}

/// Reads a manifest; types are interned into `table`, whose cutoff must
/// match the header.
inline QManifest read_manifest(std::istream& in, TypeTable& table) {
  QManifest q;
  std::string line;
  std::size_t offset = 0;
  bool header = false;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    if (!header) {
      std::istringstream h(line);
      std::string hash, name, kind, word, rs, ms, ks, bs;
      h >> hash >> name >> kind >> word >> rs >> ms >> ks >> bs;
      auto field = [&](const std::string& f, const char* key) -> std::uint64_t {
        if (f.rfind(key, 0) != 0) throw ParseError(std::string("manifest header lacks ") + key, start);
        try {
          return std::stoull(f.substr(std::string(key).size()));
        } catch (const std::exception&) {
          throw ParseError(std::string("bad value for ") + key, start);
        }
      };
      if (hash != "#" || name != "ehrlab" || kind != "Q_B" || word != "manifest") throw ParseError("not a Q_B manifest", start);
      q.r = static_cast<std::uint32_t>(field(rs, "r="));
      q.m = static_cast<std::uint32_t>(field(ms, "m="));
      q.k = static_cast<std::uint32_t>(field(ks, "k="));
      q.bound = field(bs, "B=");
      if (q.k != table.cutoff()) throw InvalidArgument("manifest cutoff differs from the type table");
      header = true;
      continue;
    }
    if (line[0] == '#') continue;
    const auto sep = line.find(" ; T=");
    if (line.rfind("S=", 0) != 0 || sep == std::string::npos) throw ParseError("malformed manifest entry", start);
    QEntry e;
    std::istringstream names(line.substr(2, sep - 2));
    std::string name;
    std::size_t col = 2;
    while (names >> name) {
      const std::size_t at = line.find(name, col);
      try {
        e.types.push_back(parse_type(name, q.m, table));
      } catch (const ParseError& err) {
        throw ParseError(std::string("manifest: ") + err.what(), start + at + err.position());
      }
      col = at + name.size();
    }
    e.types = make_type_set(std::move(e.types));
    try {
      e.witness = parse_shape(std::string_view(line).substr(sep + 5));
    } catch (const ParseError& err) {
      throw ParseError(std::string("manifest: ") + err.what(), start + sep + 5 + err.position());
    }
    q.entries.push_back(std::move(e));
  }
  if (!header) throw ParseError("empty manifest", 0);
  return q;
}

// ---------------------------------------------------------------------------
// Colourings into a type set.

struct SColouringOptions {
  /// Cap on the windows of m tail colours tracked for a lasso.
  std::size_t max_windows = 1u << 16;
};

namespace detail {

/// Depth-`level` type of the first node of a path coloured c[0], c[1], ...;
/// needs c.size() == level + 1.
inline TypeId path_type(const std::vector<Colour>& c, TypeTable& table) {
  const auto level = static_cast<std::uint32_t>(c.size() - 1);
  TypeId t = table.intern(0, c.back(), {});
  for (std::uint32_t j = 1; j <= level; ++j) t = table.intern(j, c[level - j], {{t, 1}});
  return t;
}

inline std::vector<Colour> top_down(FeasibleTypes& f, const RootedTree& t, const std::vector<std::uint32_t>& sets,
                                    std::optional<std::pair<NodeId, TypeId>> extra) {
  std::vector<Colour> colours(t.size(), 0);
  std::vector<TypeId> chosen(t.size(), 0);
  chosen[t.root()] = f.set(sets[t.root()]).front();
  for (NodeId v : t.bfs_order()) {
    colours[v] = f.info(chosen[v]).colour;
    std::vector<std::uint32_t> kid_sets;
    for (NodeId c : t.children(v)) kid_sets.push_back(sets[c]);
    std::optional<TypeId> x;
    if (extra && extra->first == v) x = extra->second;
    if (kid_sets.empty() && !x) continue;
    auto picks = f.assign_children(chosen[v], kid_sets, x);
    if (!picks) throw InvariantViolation("feasible type could not be expanded");
    auto ch = t.children(v);
    for (std::size_t i = 0; i < ch.size(); ++i) chosen[ch[i]] = (*picks)[i];
  }
  return colours;
}

}  // namespace detail

/// A rooted colouring of t all of whose node types lie in S, or nullopt if
/// there is none. For a lasso the tail colouring is found through the graph
/// of windows of m consecutive tail colours; every infinite colouring of the
/// tail runs into a cycle of that graph, so nullopt is a proof of absence in
/// both cases. The returned tree has t's arena nodes under the same ids,
/// plus possibly some tail nodes made explicit before the new period.
inline std::optional<ColouredTree> find_S_colouring(const TypeSet& s, const RootedTree& t, const Palette& p,
                                                    std::uint32_t m, TypeTable& table, SColouringOptions opts = {}) {
  detail::check_type_set(s, m, table);
  std::vector<TypeId> cand;
  for (TypeId x : s) {
    if (within_palette(x, p, table)) cand.push_back(x);
  }
  FeasibleTypes f(table, cand, m);
  auto verify = [&](const ColouredTree& out) {
    const auto types = compute_types(out, m, table);
    for (TypeId x : types.nodes) {
      if (!contains(s, x)) throw InvariantViolation("colouring realizes " + table.canonical(x) + " outside the set");
    }
    for (TypeId x : types.tail) {
      if (!contains(s, x)) throw InvariantViolation("tail realizes " + table.canonical(x) + " outside the set");
    }
  };

  if (!t.infinite()) {
    const auto sets = f.compute(t);
    if (f.set(sets[t.root()]).empty()) return std::nullopt;
    ColouredTree out{t, detail::top_down(f, t, sets, std::nullopt)};
    verify(out);
    return out;
  }

  // Windows are indexed in base r over colours 1..r.
  const std::uint32_t r = p.r;
  std::uint64_t windows = 1;
  for (std::uint32_t i = 0; i < m; ++i) {
    windows *= r;
    if (windows > opts.max_windows) throw GuardExceeded("tail window graph exceeds the budget");
  }
  auto decode = [&](std::uint64_t w) {
    std::vector<Colour> c(m);
    for (std::uint32_t i = m; i-- > 0;) {
      c[i] = static_cast<Colour>(w % r) + 1;
      w /= r;
    }
    return c;
  };
  auto encode = [&](const std::vector<Colour>& c, std::size_t from) {
    std::uint64_t w = 0;
    for (std::size_t i = from; i < from + m; ++i) w = w * r + (c[i] - 1);
    return w;
  };
  // succ[w][c-1]: next window after appending c, if the (m+1)-window's type
  // is allowed.
  std::vector<std::vector<std::optional<std::uint64_t>>> succ(windows, std::vector<std::optional<std::uint64_t>>(r));
  for (std::uint64_t w = 0; w < windows; ++w) {
    auto c = decode(w);
    for (Colour x = 1; x <= r; ++x) {
      c.push_back(x);
      if (contains(s, detail::path_type(c, table))) succ[w][x - 1] = encode(c, 1);
      c.pop_back();
    }
  }
  std::vector<bool> good(windows, true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint64_t w = 0; w < windows; ++w) {
      if (!good[w]) continue;
      const bool live = std::any_of(succ[w].begin(), succ[w].end(), [&](const auto& n) { return n && good[*n]; });
      if (!live) {
        good[w] = false;
        changed = true;
      }
    }
  }

  const Lasso& lasso = *t.lasso();
  const NodeId attach = lasso.attach_leaf;
  for (std::uint64_t start = 0; start < windows; ++start) {
    if (!good[start]) continue;
    const auto head = decode(start);
    std::optional<std::pair<NodeId, TypeId>> extra;
    if (m > 0) extra = std::make_pair(attach, detail::path_type(head, table));
    const auto sets = f.compute(t, extra);
    if (f.set(sets[t.root()]).empty()) continue;

    ColouredTree out{t, detail::top_down(f, t, sets, extra)};
    out.tree.clear_lasso();
    // Greedy walk through good windows until a window repeats.
    std::vector<Colour> tail = head;
    std::map<std::uint64_t, std::size_t> seen;
    std::uint64_t w = start;
    while (!seen.count(w)) {
      seen.emplace(w, tail.size() - m);
      for (Colour x = 1; x <= r; ++x) {
        if (succ[w][x - 1] && good[*succ[w][x - 1]]) {
          tail.push_back(x);
          w = *succ[w][x - 1];
          break;
        }
      }
    }
    // Window w begins at tail position seen[w] and again at the end; the
    // colours from there on repeat.
    const std::size_t cycle_start = seen[w];
    const std::size_t cycle_end = tail.size() - m;
    NodeId cur = attach;
    for (std::size_t i = 0; i < cycle_start; ++i) cur = out.add_child(cur, tail[i]);
    std::vector<Colour> period;
    for (std::size_t i = cycle_start; i < cycle_end; ++i) period.push_back(tail[i]);
    out.tree.set_lasso(Lasso{cur, period});
    verify(out);
    return out;
  }
  return std::nullopt;
}

}  // namespace ehrlab
