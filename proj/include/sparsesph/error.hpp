#pragma once

#include <stdexcept>
#include <string>

namespace sparsesph {

/// Invalid argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Request outside the supported numeric range (e.g. exact 3j beyond l = 64).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Least-squares system without full column rank.
class RankDeficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero-energy or otherwise degenerate input to an algorithm.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, truncated or corrupt file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}
}  // namespace detail

}  // namespace sparsesph
