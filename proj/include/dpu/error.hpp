#pragma once

#include <stdexcept>
#include <string>

namespace dpu {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: files, configs, datasets, priors.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A function was evaluated outside its domain (e.g. log loss at z <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Optimisation produced non-finite parameters or risks.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpu
