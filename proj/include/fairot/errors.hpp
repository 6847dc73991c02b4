#pragma once

#include <stdexcept>
#include <string>

namespace fairot {

// Bad inputs: malformed distributions, schema mismatches, size-cap breaches.
// The CLI maps these to exit code 2.
class invalid_input : public std::runtime_error {
 public:
  explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

// The numbers went wrong: NaN/overflow inside a solver, training divergence.
// The CLI maps these to exit code 3.
class numeric_failure : public std::runtime_error {
 public:
  explicit numeric_failure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fairot
