#pragma once

#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"

namespace ehrlab {

/// Colours c0..cr; c0 is reserved for the root.
struct Palette {
  std::uint32_t r = 1;

  Palette() = default;
  explicit Palette(std::uint32_t r_) : r(r_) {
    if (r == 0) throw InvalidArgument("palette needs r >= 1");
  }
  std::uint32_t size() const noexcept { return r + 1; }
  bool contains(Colour c) const noexcept { return c <= r; }
  bool operator==(const Palette&) const = default;
};

inline constexpr Colour kRootColour = 0;

/// Checks the rooted-colouring rule (colour c0 exactly at the root) and the
/// palette range, including lasso tail colours. Returns an empty string when
/// fine, else a description of the first problem.
inline std::string rooted_violation(const ColouredTree& t, const Palette& p) {
  if (t.colours.size() != t.size()) return "colouring is not total";
  for (NodeId v = 0; v < t.size(); ++v) {
    const Colour c = t.colours[v];
    if (!p.contains(c)) return "node " + std::to_string(v) + " has colour c" + std::to_string(c) + " outside the palette";
    if ((c == kRootColour) != (v == t.root())) {
      return v == t.root() ? "root must have colour c0" : "node " + std::to_string(v) + " is not the root but has colour c0";
    }
  }
  if (const auto& l = t.tree.lasso()) {
    for (Colour c : l->period_colours) {
      if (!p.contains(c)) return "lasso colour c" + std::to_string(c) + " outside the palette";
      if (c == kRootColour) return "lasso path uses the root colour c0";
    }
  }
  return {};
}

inline bool is_rooted(const ColouredTree& t, const Palette& p) { return rooted_violation(t, p).empty(); }

inline void require_rooted(const ColouredTree& t, const Palette& p) {
  if (auto why = rooted_violation(t, p); !why.empty()) throw InvalidArgument("not a rooted colouring: " + why);
}

/// Calls f(colours) for every rooted colouring of the arena nodes of `t`
/// (lasso tail colours are left as they are). Nodes are assigned in arena
/// order, colours c1..cr, last node fastest.
template <class F>
void for_each_rooted_colouring(const RootedTree& t, const Palette& p, F&& f) {
  std::vector<Colour> colours(t.size(), 1);
  colours[t.root()] = kRootColour;
  for (;;) {
    f(static_cast<const std::vector<Colour>&>(colours));
    std::size_t i = colours.size();
    for (;;) {
      if (i == 1) return;
      --i;
      if (colours[i] < p.r) {
        ++colours[i];
        break;
      }
      colours[i] = 1;
    }
  }
}

/// r^(|V|-1), saturating at UINT64_MAX.
inline std::uint64_t rooted_colouring_count(std::size_t nodes, const Palette& p) {
  std::uint64_t n = 1;
  for (std::size_t i = 1; i < nodes; ++i) {
    if (n > UINT64_MAX / p.r) return UINT64_MAX;
    n *= p.r;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Augmented colours: each base colour paired with a depth marker. Markers
// are col'_0..col'_{D0} for shallow depths and residues in (-D/2, D/2] for
// depths beyond D0.

/// Representative of x mod D in (-D/2, D/2]. D must be even and positive.
inline std::int64_t centered_mod(std::int64_t x, std::int64_t D) {
  std::int64_t r = ((x % D) + D) % D;
  if (r > D / 2) r -= D;
  return r;
}

struct Marker {
  bool primed = true;      ///< col'_value when true, residue `value` otherwise
  std::int64_t value = 0;

  bool operator==(const Marker&) const = default;
  std::string str() const { return primed ? "'" + std::to_string(value) : std::to_string(value); }
};

inline Marker depth_marker(std::uint64_t depth, std::uint32_t D, std::uint32_t D0) {
  if (depth <= D0) return Marker{true, static_cast<std::int64_t>(depth)};
  return Marker{false, centered_mod(static_cast<std::int64_t>(depth), D)};
}

class AugmentedPalette {
 public:
  AugmentedPalette(Palette base, std::uint32_t D, std::uint32_t D0) : base_(base), D_(D), D0_(D0) {
    if (D == 0 || D % 2 != 0) throw InvalidArgument("D must be a positive even integer");
    if (D0 == 0) throw InvalidArgument("D0 must be positive");
  }

  const Palette& base() const noexcept { return base_; }
  std::uint32_t D() const noexcept { return D_; }
  std::uint32_t D0() const noexcept { return D0_; }
  std::uint32_t marker_count() const noexcept { return D0_ + 1 + D_; }

  /// The augmented palette as a flat palette; (c0, col'_0) is index 0.
  Palette flat() const { return Palette(base_.size() * marker_count() - 1); }

  Colour encode(Colour base_colour, const Marker& m) const {
    return base_colour * marker_count() + marker_index(m);
  }
  Colour base_of(Colour c) const noexcept { return c / marker_count(); }
  Marker marker_of(Colour c) const {
    const std::uint32_t i = c % marker_count();
    if (i <= D0_) return Marker{true, static_cast<std::int64_t>(i)};
    return Marker{false, static_cast<std::int64_t>(i) - static_cast<std::int64_t>(D0_) - static_cast<std::int64_t>(D_ / 2)};
  }
  Marker marker_for_depth(std::uint64_t depth) const { return depth_marker(depth, D_, D0_); }

  std::string describe(Colour c) const { return "(c" + std::to_string(base_of(c)) + "," + marker_of(c).str() + ")"; }

 private:
  std::uint32_t marker_index(const Marker& m) const {
    if (m.primed) return static_cast<std::uint32_t>(m.value);
    return static_cast<std::uint32_t>(m.value + static_cast<std::int64_t>(D0_) + static_cast<std::int64_t>(D_ / 2));
  }

  Palette base_;
  std::uint32_t D_;
  std::uint32_t D0_;
};

/// Enhanced colouring: every node v gets (sigma(v), F(d(v))). A lasso is
/// first unrolled down to depth D0 so that the augmented tail colours are
/// periodic from the attach leaf on; the new period is lcm(period, D).
inline ColouredTree enhance(const ColouredTree& t, const AugmentedPalette& aug) {
  require_rooted(t, aug.base());
  ColouredTree src = t;
  if (const auto& l = t.tree.lasso(); l && t.tree.depth(l->attach_leaf) < aug.D0()) {
    const Lasso lasso = *l;
    src.tree.clear_lasso();
    NodeId cur = lasso.attach_leaf;
    std::size_t j = 1;
    for (std::uint32_t d = t.tree.depth(cur); d < aug.D0(); ++d, ++j) cur = src.add_child(cur, lasso.colour_at(j));
    std::vector<Colour> rotated;
    for (std::size_t i = 0; i < lasso.period(); ++i) rotated.push_back(lasso.colour_at(j + i));
    src.tree.set_lasso(Lasso{cur, std::move(rotated)});
  }
  ColouredTree out = src;
  for (NodeId v = 0; v < src.size(); ++v) {
    out.colours[v] = aug.encode(src.colours[v], aug.marker_for_depth(src.tree.depth(v)));
  }
  if (const auto& l = src.tree.lasso()) {
    const std::size_t period = std::lcm(l->period(), static_cast<std::size_t>(aug.D()));
    const std::uint32_t d0 = src.tree.depth(l->attach_leaf);
    Lasso al{l->attach_leaf, {}};
    for (std::size_t j = 1; j <= period; ++j) {
      al.period_colours.push_back(aug.encode(l->colour_at(j), aug.marker_for_depth(d0 + j)));
    }
    out.tree.clear_lasso();
    out.tree.set_lasso(std::move(al));
  }
  return out;
}

/// First coordinate of an augmented colouring.
inline ColouredTree strip_markers(const ColouredTree& t, const AugmentedPalette& aug) {
  ColouredTree out = t;
  for (auto& c : out.colours) c = aug.base_of(c);
  if (const auto& l = t.tree.lasso()) {
    Lasso bl = *l;
    for (auto& c : bl.period_colours) c = aug.base_of(c);
    out.tree.clear_lasso();
    out.tree.set_lasso(std::move(bl));
  }
  return out;
}

/// Legal = the enhancement of some rooted base colouring; equivalently the
/// colouring is rooted over the base palette in its first coordinate and
/// every marker matches the node's depth.
inline bool is_legal(const ColouredTree& t, const AugmentedPalette& aug) {
  if (t.colours.size() != t.size()) return false;
  const Colour limit = aug.base().size() * aug.marker_count();
  for (NodeId v = 0; v < t.size(); ++v) {
    const Colour c = t.colours[v];
    if (c >= limit) return false;
    if ((aug.base_of(c) == kRootColour) != (v == t.root())) return false;
    if (aug.marker_of(c) != aug.marker_for_depth(t.tree.depth(v))) return false;
  }
  if (const auto& l = t.tree.lasso()) {
    const std::uint64_t d0 = t.tree.depth(l->attach_leaf);
    const std::uint64_t horizon = static_cast<std::uint64_t>(aug.D0()) + l->period() * aug.D() + l->period();
    for (std::uint64_t j = 1; j <= horizon; ++j) {
      const Colour c = l->colour_at(j);
      if (c >= limit || aug.base_of(c) == kRootColour) return false;
      if (aug.marker_of(c) != aug.marker_for_depth(d0 + j)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Standalone colouring files: "nodeId colourIndex" per line, '#' comments.

inline std::vector<Colour> read_colouring(std::istream& in, std::size_t nodes) {
  std::vector<Colour> out(nodes, 0);
  std::vector<bool> seen(nodes, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long id = 0;
    long long colour = 0;
    if (!(ls >> id)) continue;
    if (!(ls >> colour) || id < 0 || colour < 0) throw ParseError("bad colouring line " + std::to_string(lineno), 0);
    if (static_cast<std::size_t>(id) >= nodes) throw InvalidArgument("colouring names node " + std::to_string(id) + " outside the tree");
    out[static_cast<std::size_t>(id)] = static_cast<Colour>(colour);
    seen[static_cast<std::size_t>(id)] = true;
  }
  for (std::size_t v = 0; v < nodes; ++v) {
    if (!seen[v]) throw InvalidArgument("colouring misses node " + std::to_string(v));
  }
  return out;
}

inline void write_colouring(std::ostream& os, const std::vector<Colour>& colours) {
  for (std::size_t v = 0; v < colours.size(); ++v) os << v << ' ' << colours[v] << '\n';
}

}  // namespace ehrlab
