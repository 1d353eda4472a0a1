#pragma once

#include <stdexcept>
#include <string>

namespace ibmot {

/// Malformed input: bad shapes, non-finite values, out-of-range arguments.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Input text that could not be parsed (malformed JSON or CSV).
class ParseError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

/// The marginals admit no martingale coupling (not in convex order).
class Infeasible : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine stopped without meeting its tolerance, or produced a
/// non-finite value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ibmot
