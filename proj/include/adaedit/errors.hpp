#pragma once

#include <stdexcept>
#include <string>

namespace adaedit {

// Base for every error raised by the library. Callers that only care about
// "something in the editing stack failed" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class EmptySelectionError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class CacheMissError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

// Raised when an integration state becomes non-finite or blows past the
// divergence bound. `step` is the grid step being computed.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step)
      : Error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace adaedit
