#pragma once

#include <stdexcept>
#include <string>

namespace eegdiff {

// Malformed input data: bad shapes, missing files, checksum mismatches.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that could not complete (divergence, non-finite output, ...).
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an argument precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace eegdiff
