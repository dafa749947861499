#pragma once

#include <stdexcept>
#include <string>

namespace occ {

/// Bad input: malformed topology, inconsistent dimensions, violated
/// standing assumptions. The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gain synthesis could not produce a valid answer (exit code 2).
class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration or learning failed at run time (exit code 3).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace occ
