#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace costorm {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's contract (empty topic, unbound placeholder, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Transport-level failure; the call may be retried.
class RetriableError : public Error {
 public:
  using Error::Error;
};

// The gateway answered, but not usefully (empty or unparseable after retry).
class GatewayError : public Error {
 public:
  using Error::Error;
};

// Search budget has no remaining queries.
class BudgetExhausted : public Error {
 public:
  BudgetExhausted() : Error("search budget exhausted") {}
};

class EmptyMapError : public Error {
 public:
  EmptyMapError() : Error("mind map holds no information") {}
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Operation conflicts with the current state (terminated session, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace costorm
