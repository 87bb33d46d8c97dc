#pragma once

#include <stdexcept>

namespace rfh {

// Data-dependent guard tripped mid-computation (non-real output where a real
// field is required, resolution bounds exceeded, ...). CLI exit code 3.
struct numerical_guard_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iteration failed to converge within its budget. CLI exit code 4.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rfh
