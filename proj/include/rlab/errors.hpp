#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

// Invalid mathematical input (zero vector, collinear pair, degenerate centre).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Caller violated the calling contract (dimension mismatch, malformed config).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation does not hold.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A configured resource cap (lattice points, convolution pairs) was exceeded.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rlab
