#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pdctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown on dimension mismatches, non-finite inputs and out-of-domain parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver or linear system had no (finite) solution.
class NoSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class UnsupportedCost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline void require_size(Eigen::Index actual, Eigen::Index expected,
                         const char* what) {
  if (actual != expected) {
    throw InvalidArgument(std::string(what) + ": expected dimension " +
                          std::to_string(expected) + ", got " +
                          std::to_string(actual));
  }
}

}  // namespace detail
}  // namespace pdctl
