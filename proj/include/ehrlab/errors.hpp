#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ehrlab {

/// Malformed input text (tree literal, sentence, manifest). Carries the
/// byte offset at which the problem was detected.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// An exhaustive search would exceed its configured budget.
class GuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments does not hold (bad node id, non-rooted
/// colouring, wrong palette, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A strategy or construction reached a state its invariants rule out.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ehrlab
