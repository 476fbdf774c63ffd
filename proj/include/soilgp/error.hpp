#pragma once

#include <stdexcept>
#include <string>

namespace soilgp {

/// Invalid or inconsistent input data (bad rows, out-of-range indices, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a result (e.g. Cholesky failed
/// after the full jitter ladder).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace soilgp
