#pragma once

#include <stdexcept>
#include <string>

namespace largegame {

// Malformed or inconsistent inputs: non-square matrices, measures on
// different spaces, out-of-range indices.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed inputs outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A payoff expression failed to evaluate (log of a nonpositive value,
// division by zero, non-finite result). `node` is the formatted subterm.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::string node)
      : std::runtime_error(what + " at " + node), node_(std::move(node)) {}
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

// Exact enumeration would exceed the configured cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Syntax or binding error in a payoff expression, located at 1-based
// line/column within the source text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                           ": " + message),
        message_(message),
        line_(line),
        column_(column) {}
  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

// A payoff referenced a label or coordinate the bound space lacks.
class BindError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Distribution handed to an equilibrium-distribution check whose
// characteristics marginal does not match the game.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace largegame
