#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace culsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad argument, bad arity).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent corpus data. `line()` is 1-based, 0 when the
/// error is not tied to a particular line.
class CorpusError : public Error {
 public:
  explicit CorpusError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Raised by bundle loading.
class BundleError : public Error {
 public:
  enum class Kind { version, corruption, io };
  BundleError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Input submitted while the session is not waiting for the player.
class TurnGateError : public Error {
 public:
  using Error::Error;
};

}  // namespace culsim
