#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace dynareg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (dimensions, ranges, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical failure: non-finite values, failed factorization, blow-up.
/// `step()` carries the time-step index when the failure happened inside a
/// sweep or an integrator.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<long> step = std::nullopt)
      : Error(step ? what + " (step " + std::to_string(*step) + ")" : what),
        step_(step) {}

  std::optional<long> step() const { return step_; }

 private:
  std::optional<long> step_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace dynareg
