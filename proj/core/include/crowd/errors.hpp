#pragma once

#include <stdexcept>
#include <string>

namespace crowd {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or other numerical breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Arrays whose shapes do not match the grid they are used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A requested time or index lies outside the available range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// The requested operation is not defined for this model family.
class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

// A checked invariant (maximum principle, positivity) was violated in strict mode.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace crowd
