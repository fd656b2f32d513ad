#pragma once

#include <stdexcept>
#include <string>

namespace metafors {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent experiment configuration. The CLI maps this to
// exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// A ground-truth trajectory left the finite range. The CLI maps this to
// exit code 3. Divergence of a *forecast* is not an error; it is a
// measured outcome and is reported through result flags instead.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace metafors
