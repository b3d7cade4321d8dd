#pragma once

// Tree literals.
//
//   tree   := 'c' NAT children? lasso?
//   children := '(' tree (',' tree)* ')'
//   lasso  := '@[' 'c' NAT (',' 'c' NAT)* ']'
//
// A lasso suffix may appear on at most one node, and that node must be a
// leaf. Whitespace between tokens is ignored by the parser and never emitted
// by the printers.

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"

namespace ehrlab {

namespace detail {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view text) : text_(text) {}

  ColouredTree parse() {
    ColouredTree out;
    skip_ws();
    out.colours[0] = colour();
    body(out, out.root());
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    if (lasso_) out.tree.set_lasso(std::move(*lasso_));
    return out;
  }

 private:
  void body(ColouredTree& t, NodeId at) {
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      for (;;) {
        skip_ws();
        const Colour c = colour();
        const NodeId child = t.add_child(at, c);
        body(t, child);
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      skip_ws();
      if (peek() == '@') fail("lasso suffix on a non-leaf");
      return;
    }
    if (peek() == '@') {
      const std::size_t at_pos = pos_;
      ++pos_;
      expect('[');
      Lasso l;
      l.attach_leaf = at;
      for (;;) {
        skip_ws();
        l.period_colours.push_back(colour());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(']');
        break;
      }
      if (lasso_) {
        pos_ = at_pos;
        fail("more than one lasso");
      }
      lasso_ = std::move(l);
    }
  }

  Colour colour() {
    expect('c');
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      fail("expected colour index");
    }
    std::uint64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
      if (v > 0xFFFFFFFFull) fail("colour index too large");
      ++pos_;
    }
    return static_cast<Colour>(v);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::optional<Lasso> lasso_;
};

inline void append_lasso(std::string& out, const Lasso& l) {
  out += "@[";
  for (std::size_t i = 0; i < l.period_colours.size(); ++i) {
    if (i) out += ',';
    out += 'c';
    out += std::to_string(l.period_colours[i]);
  }
  out += ']';
}

inline std::string literal_of(const ColouredTree& t, NodeId v, bool sorted) {
  std::string out = "c" + std::to_string(t.colours[v]);
  auto ch = t.tree.children(v);
  if (!ch.empty()) {
    std::vector<std::string> parts;
    parts.reserve(ch.size());
    for (NodeId c : ch) parts.push_back(literal_of(t, c, sorted));
    if (sorted) std::sort(parts.begin(), parts.end());
    out += '(';
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ',';
      out += parts[i];
    }
    out += ')';
  } else if (t.tree.lasso() && t.tree.lasso()->attach_leaf == v) {
    append_lasso(out, *t.tree.lasso());
  }
  return out;
}

}  // namespace detail

inline ColouredTree parse_tree(std::string_view text) { return detail::LiteralParser(text).parse(); }

/// Literal in stored child order.
inline std::string serialize_tree(const ColouredTree& t) { return detail::literal_of(t, t.root(), false); }

/// Literal with children sorted by their own canonical literal; equal for
/// exactly the root- and colour-preserving isomorphic trees.
inline std::string canonical_literal(const ColouredTree& t) { return detail::literal_of(t, t.root(), true); }

/// Uncoloured canonical form, "()" nesting only.
inline std::string canonical_shape(const RootedTree& t, NodeId v = 0) {
  std::vector<std::string> parts;
  for (NodeId c : t.children(v)) parts.push_back(canonical_shape(t, c));
  std::sort(parts.begin(), parts.end());
  std::string out = "(";
  for (auto& p : parts) out += p;
  out += ')';
  return out;
}

inline bool coloured_isomorphic(const ColouredTree& a, const ColouredTree& b) {
  if (a.tree.infinite() || b.tree.infinite()) {
    throw InvalidArgument("coloured_isomorphic: lasso trees are not supported");
  }
  return a.size() == b.size() && canonical_literal(a) == canonical_literal(b);
}

/// Reads a corpus: one literal per line, '#' starts a comment, blank lines
/// skipped.
inline std::vector<ColouredTree> read_corpus(std::istream& in) {
  std::vector<ColouredTree> out;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
    try {
      out.push_back(parse_tree(line));
    } catch (const ParseError& e) {
      throw ParseError(std::string("corpus: ") + e.what(), line_start + e.position());
    }
  }
  return out;
}

inline void write_corpus(std::ostream& os, const std::vector<ColouredTree>& trees) {
  for (const auto& t : trees) os << serialize_tree(t) << '\n';
}

}  // namespace ehrlab
