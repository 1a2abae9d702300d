#pragma once

#include <stdexcept>
#include <string>

namespace seqdrift {

// Precondition or configuration violation detected at an API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Summary dimensionality does not match what the consumer was built for.
class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Raised when a calibration run cannot honour its survivor floor.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of a stateful object, e.g. stepping a detector after it fired.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace seqdrift
