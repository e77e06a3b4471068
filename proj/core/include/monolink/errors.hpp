#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace monolink {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input: rule files, triple files, model documents.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that is inconsistent with the signature, the model or
// an operation's precondition (dimension mismatch, unknown predicate, a
// non-monotonic model handed to the soundness checker, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// The requested rule space or computation is too large or not defined for
// the given model (no bilinear view, capacity unbounded, space cap hit).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace monolink
