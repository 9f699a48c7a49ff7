#pragma once

#include <stdexcept>
#include <string>

namespace memdd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid mesh, boundary layout, or scenario configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Input data violating a sign or shape requirement (e.g. negative densities).
class DataError : public Error {
public:
  using Error::Error;
};

/// Function parameter outside its admissible range.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Linear or nonlinear solver breakdown.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace memdd
