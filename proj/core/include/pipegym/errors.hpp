#pragma once

#include <stdexcept>
#include <string>

namespace pipegym {

// Bad values in a config file or spec struct.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed external input (dump files, checkpoints, grids).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal inconsistency that can only come from a bug (NaN state,
// dimension mismatch). Not recoverable by the caller.
struct HardFault : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace pipegym
