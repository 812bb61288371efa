#pragma once

#include <stdexcept>
#include <string>

namespace rgm {

// Invalid input: malformed files, schema violations, bad arguments.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numerical or sampling failure during a computation.
class RuntimeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace rgm
