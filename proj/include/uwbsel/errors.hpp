#pragma once

#include <stdexcept>
#include <string>

namespace uwbsel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad scenario files, malformed profiles, invalid configuration.
struct ScenarioError : Error {
  using Error::Error;
};

/// Numerical or runtime failures inside a run (filter preconditions,
/// covariance health violations).
struct FilterError : Error {
  using Error::Error;
};

}  // namespace uwbsel
