#pragma once

// Existential monadic second-order sentences over rooted trees: a prefix of
// set quantifiers followed by a first-order formula over nodes with the root
// constant, equality, the parent relation and set membership.
//
//   sentence := ('EXISTS-SET' NAME '.')* formula
//   formula  := disj ('->' formula)?
//   disj     := conj ('OR' conj)*
//   conj     := unary ('AND' unary)*
//   unary    := 'NOT' unary | ('FORALL' | 'EXISTS') NAME '.' formula
//             | '(' formula ')' | atom
//   atom     := term '=' term | 'PARENT' '(' term ')' '=' term
//             | term '=' 'PARENT' '(' term ')' | term 'IN' NAME
//   term     := 'ROOT' | NAME
//
// A quantifier's body extends as far right as possible. PARENT(ROOT) names
// no node, so an atom mentioning it is false.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ehrlab/errors.hpp"
#include "ehrlab/tree.hpp"

namespace ehrlab {

struct Term {
  bool root = false;
  std::string name;
  /// Number of node quantifiers enclosing the binder of this variable.
  std::uint32_t slot = 0;

  bool operator==(const Term&) const = default;
};

struct Formula {
  enum class Kind { Eq, Parent, In, Not, And, Or, Implies, Forall, Exists, ExistsSet };
  Kind kind = Kind::Eq;
  /// Eq: a = b. Parent: PARENT(a) = b. In: a IN sets[set].
  Term a, b;
  std::uint32_t set = 0;
  /// Bound variable or set name.
  std::string name;
  std::vector<Formula> kids;

  bool operator==(const Formula&) const = default;
};

struct Sentence {
  std::vector<std::string> sets;
  Formula body;

  bool operator==(const Sentence&) const = default;
};

namespace detail {

class SentenceParser {
 public:
  explicit SentenceParser(std::string_view text) : text_(text) {}

  Sentence parse() {
    Sentence s;
    for (;;) {
      skip_ws();
      if (!keyword_ahead("EXISTS-SET")) break;
      pos_ += 10;
      const auto [name, at] = identifier();
      if (std::find(s.sets.begin(), s.sets.end(), name) != s.sets.end()) {
        fail("set " + name + " is quantified twice", at);
      }
      s.sets.push_back(name);
      expect(".");
    }
    sets_ = s.sets;
    s.body = formula();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters", pos_);
    return s;
  }

 private:
  Formula formula() {
    Formula left = disjunction();
    skip_ws();
    if (text_.substr(pos_, 2) == "->") {
      pos_ += 2;
      Formula f;
      f.kind = Formula::Kind::Implies;
      f.kids.push_back(std::move(left));
      f.kids.push_back(formula());
      return f;
    }
    return left;
  }

  Formula disjunction() {
    Formula left = conjunction();
    for (;;) {
      skip_ws();
      if (!keyword_ahead("OR")) return left;
      pos_ += 2;
      Formula f;
      f.kind = Formula::Kind::Or;
      f.kids.push_back(std::move(left));
      f.kids.push_back(conjunction());
      left = std::move(f);
    }
  }

  Formula conjunction() {
    Formula left = unary();
    for (;;) {
      skip_ws();
      if (!keyword_ahead("AND")) return left;
      pos_ += 3;
      Formula f;
      f.kind = Formula::Kind::And;
      f.kids.push_back(std::move(left));
      f.kids.push_back(unary());
      left = std::move(f);
    }
  }

  Formula unary() {
    skip_ws();
    if (keyword_ahead("NOT")) {
      pos_ += 3;
      Formula f;
      f.kind = Formula::Kind::Not;
      f.kids.push_back(unary());
      return f;
    }
    if (keyword_ahead("EXISTS-SET")) fail("set quantifiers are only allowed in the leading prefix", pos_);
    const bool forall = keyword_ahead("FORALL");
    if (forall || keyword_ahead("EXISTS")) {
      pos_ += forall ? 6 : 6;
      Formula f;
      f.kind = forall ? Formula::Kind::Forall : Formula::Kind::Exists;
      f.name = identifier().first;
      expect(".");
      scope_.push_back(f.name);
      f.kids.push_back(formula());
      scope_.pop_back();
      return f;
    }
    if (peek() == '(') {
      ++pos_;
      Formula f = formula();
      expect(")");
      return f;
    }
    return atom();
  }

  Formula atom() {
    skip_ws();
    Formula f;
    if (keyword_ahead("PARENT")) {
      f.kind = Formula::Kind::Parent;
      f.a = parent_term();
      expect("=");
      f.b = term();
      return f;
    }
    Term left = term();
    skip_ws();
    if (keyword_ahead("IN")) {
      pos_ += 2;
      const auto [name, at] = identifier();
      auto it = std::find(sets_.begin(), sets_.end(), name);
      if (it == sets_.end()) fail("unknown set " + name, at);
      f.kind = Formula::Kind::In;
      f.a = left;
      f.set = static_cast<std::uint32_t>(it - sets_.begin());
      return f;
    }
    expect("=");
    skip_ws();
    if (keyword_ahead("PARENT")) {
      f.kind = Formula::Kind::Parent;
      f.a = parent_term();
      f.b = left;
      return f;
    }
    f.kind = Formula::Kind::Eq;
    f.a = left;
    f.b = term();
    return f;
  }

  Term parent_term() {
    pos_ += 6;
    expect("(");
    Term t = term();
    expect(")");
    return t;
  }

  Term term() {
    skip_ws();
    if (keyword_ahead("ROOT")) {
      pos_ += 4;
      return Term{true, "", 0};
    }
    const auto [name, at] = identifier();
    for (std::size_t i = scope_.size(); i-- > 0;) {
      if (scope_[i] == name) return Term{false, name, static_cast<std::uint32_t>(i)};
    }
    if (std::find(sets_.begin(), sets_.end(), name) != sets_.end()) fail("set " + name + " used as a node", at);
    fail("unbound variable " + name, at);
  }

  std::pair<std::string, std::size_t> identifier() {
    skip_ws();
    const std::size_t at = pos_;
    if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      fail("expected a name", at);
    }
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string name(text_.substr(at, pos_ - at));
    for (const char* kw : {"EXISTS", "FORALL", "PARENT", "IN", "ROOT", "AND", "OR", "NOT"}) {
      if (name == kw) fail("keyword " + name + " used as a name", at);
    }
    return {name, at};
  }

  bool keyword_ahead(std::string_view kw) const {
    if (text_.substr(pos_, kw.size()) != kw) return false;
    const std::size_t end = pos_ + kw.size();
    if (end >= text_.size()) return true;
    const char c = text_[end];
    if (kw == "EXISTS" && c == '-') return false;
    return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  void expect(std::string_view s) {
    skip_ws();
    if (text_.substr(pos_, s.size()) != s) fail("expected '" + std::string(s) + "'", pos_);
    pos_ += s.size();
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const { throw ParseError(what, at); }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> sets_;
  std::vector<std::string> scope_;
};

inline std::string term_str(const Term& t) { return t.root ? "ROOT" : t.name; }

inline std::string formula_str(const Formula& f, const std::vector<std::string>& sets) {
  using K = Formula::Kind;
  auto wrap = [&](const Formula& g) { return "(" + formula_str(g, sets) + ")"; };
  switch (f.kind) {
    case K::Eq:
      return term_str(f.a) + " = " + term_str(f.b);
    case K::Parent:
      return "PARENT(" + term_str(f.a) + ") = " + term_str(f.b);
    case K::In:
      return term_str(f.a) + " IN " + (f.set < sets.size() ? sets[f.set] : "?");
    case K::Not:
      return "NOT " + wrap(f.kids[0]);
    case K::And:
      return wrap(f.kids[0]) + " AND " + wrap(f.kids[1]);
    case K::Or:
      return wrap(f.kids[0]) + " OR " + wrap(f.kids[1]);
    case K::Implies:
      return wrap(f.kids[0]) + " -> " + wrap(f.kids[1]);
    case K::Forall:
      return "FORALL " + f.name + ". " + wrap(f.kids[0]);
    case K::Exists:
      return "EXISTS " + f.name + ". " + wrap(f.kids[0]);
    case K::ExistsSet:
      return "EXISTS-SET " + f.name + ". " + wrap(f.kids[0]);
  }
  return "";
}

}  // namespace detail

inline Sentence parse_sentence(std::string_view text) { return detail::SentenceParser(text).parse(); }

/// Fully parenthesized form; parse_sentence(to_string(s)) == s.
inline std::string to_string(const Sentence& s) {
  std::string out;
  for (const auto& name : s.sets) out += "EXISTS-SET " + name + ". ";
  return out + detail::formula_str(s.body, s.sets);
}

/// One sentence per file; "--" starts a comment.
inline Sentence read_sentence(std::istream& in) {
  std::string text, line;
  while (std::getline(in, line)) {
    if (auto c = line.find("--"); c != std::string::npos) line.replace(c, std::string::npos, std::string(line.size() - c, ' '));
    text += line + '\n';
  }
  return parse_sentence(text);
}

struct EhrParameters {
  std::uint32_t n_sets = 0;
  std::uint32_t rank = 0;
  bool operator==(const EhrParameters&) const = default;
};

namespace detail {

inline std::uint32_t rank_of(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::Eq:
    case K::Parent:
    case K::In:
      return 0;
    case K::Not:
      return rank_of(f.kids[0]);
    case K::And:
    case K::Or:
    case K::Implies:
      return std::max(rank_of(f.kids[0]), rank_of(f.kids[1]));
    case K::Forall:
    case K::Exists:
      return 1 + rank_of(f.kids[0]);
    case K::ExistsSet:
      throw InvalidArgument("set quantifier outside the leading prefix: not an EMSO sentence");
  }
  return 0;
}

inline void check_scopes(const Formula& f, std::uint32_t depth, std::size_t n_sets) {
  using K = Formula::Kind;
  auto check_term = [&](const Term& t) {
    if (!t.root && t.slot >= depth) throw InvalidArgument("variable " + t.name + " is not bound");
  };
  switch (f.kind) {
    case K::Eq:
    case K::Parent:
      check_term(f.a);
      check_term(f.b);
      return;
    case K::In:
      check_term(f.a);
      if (f.set >= n_sets) throw InvalidArgument("membership in an undeclared set");
      return;
    case K::Forall:
    case K::Exists:
      check_scopes(f.kids.at(0), depth + 1, n_sets);
      return;
    case K::ExistsSet:
      throw InvalidArgument("set quantifier outside the leading prefix: not an EMSO sentence");
    default:
      for (const auto& k : f.kids) check_scopes(k, depth, n_sets);
  }
}

}  // namespace detail

/// (number of set variables, quantifier rank of the first-order part).
inline EhrParameters ehr_parameters_of(const Sentence& s) {
  detail::check_scopes(s.body, 0, s.sets.size());
  return {static_cast<std::uint32_t>(s.sets.size()), detail::rank_of(s.body)};
}

/// Membership of node v in set i is bit v of sets[i].
using SetAssignment = std::vector<std::uint64_t>;

namespace detail {

class Evaluator {
 public:
  Evaluator(const RootedTree& t, const SetAssignment& sets) : t_(t), sets_(sets) {}

  bool eval(const Formula& f) {
    using K = Formula::Kind;
    switch (f.kind) {
      case K::Eq:
        return node(f.a) == node(f.b);
      case K::Parent: {
        const auto p = t_.parent(node(f.a));
        return p && *p == node(f.b);
      }
      case K::In:
        return sets_[f.set] >> node(f.a) & 1;
      case K::Not:
        return !eval(f.kids[0]);
      case K::And:
        return eval(f.kids[0]) && eval(f.kids[1]);
      case K::Or:
        return eval(f.kids[0]) || eval(f.kids[1]);
      case K::Implies:
        return !eval(f.kids[0]) || eval(f.kids[1]);
      case K::Forall:
      case K::Exists: {
        const bool want = f.kind == K::Exists;
        env_.push_back(0);
        bool result = !want;
        for (NodeId v = 0; v < t_.size(); ++v) {
          env_.back() = v;
          if (eval(f.kids[0]) == want) {
            result = want;
            break;
          }
        }
        env_.pop_back();
        return result;
      }
      case K::ExistsSet:
        throw InvalidArgument("set quantifier outside the leading prefix: not an EMSO sentence");
    }
    return false;
  }

 private:
  NodeId node(const Term& t) const { return t.root ? t_.root() : env_.at(t.slot); }

  const RootedTree& t_;
  const SetAssignment& sets_;
  std::vector<NodeId> env_;
};

}  // namespace detail

/// Truth of the first-order part under a fixed assignment of the sets.
inline bool holds_with(const Sentence& s, const RootedTree& t, const SetAssignment& sets) {
  if (t.infinite()) throw InvalidArgument("sentences are evaluated on finite trees only");
  if (sets.size() != s.sets.size()) throw InvalidArgument("one subset per set variable is needed");
  if (t.size() > 64) throw GuardExceeded("set assignments are limited to trees of at most 64 nodes");
  detail::Evaluator ev(t, sets);
  return ev.eval(s.body);
}

struct EvalOptions {
  /// Largest number of set assignments enumerated, 2^(n_sets |V|).
  std::uint64_t max_assignments = 1ull << 24;
};

/// Tries every assignment of the sets, returning a satisfying one if any.
inline std::optional<SetAssignment> find_assignment(const Sentence& s, const RootedTree& t, EvalOptions opts = {}) {
  if (t.infinite()) throw InvalidArgument("sentences are evaluated on finite trees only");
  ehr_parameters_of(s);
  const std::uint64_t bits = s.sets.size() * t.size();
  if (bits >= 63 || (1ull << bits) > opts.max_assignments) {
    throw GuardExceeded("2^" + std::to_string(bits) + " set assignments exceed the budget");
  }
  const std::uint64_t per = t.size();
  const std::uint64_t mask = per == 64 ? ~0ull : (1ull << per) - 1;
  SetAssignment sets(s.sets.size(), 0);
  for (std::uint64_t code = 0; code < (1ull << bits); ++code) {
    for (std::size_t i = 0; i < sets.size(); ++i) sets[i] = code >> (i * per) & mask;
    if (holds_with(s, t, sets)) return sets;
  }
  return std::nullopt;
}

inline bool evaluate(const Sentence& s, const RootedTree& t, EvalOptions opts = {}) {
  return find_assignment(s, t, opts).has_value();
}

/// The infiniteness sentence: a set containing the root in which every
/// member has a child in the set.
inline const char* kInfinitenessSentence =
    "EXISTS-SET S. (ROOT IN S) AND (FORALL u. (u IN S) -> (EXISTS v. (v IN S) AND (PARENT(v)=u)))";

}  // namespace ehrlab
