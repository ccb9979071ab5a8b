#pragma once

#include <stdexcept>
#include <string>

namespace stgcn {

/// Malformed input file (carries the offending line number in the message).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor dimension mismatch.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value encountered where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failure (missing path, short read, bad magic).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stgcn
