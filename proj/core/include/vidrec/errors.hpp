#pragma once

#include <stdexcept>
#include <string>

namespace vidrec {

// Shape, extent, or argument inconsistency detected before any computation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf, or a forward pass was not reproducible.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of a differentiation tape (mixed tapes, consumed tape, non-scalar loss).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed file contents: bad magic/version, truncated payload, schema violations.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Semantically invalid input: out-of-range ids, mismatched tables, bad configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace vidrec
