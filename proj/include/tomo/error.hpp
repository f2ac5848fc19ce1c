#ifndef TOMO_ERROR_HPP
#define TOMO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tomo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tree: cycle, disconnected node, unary internal node, bad leaf list.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dimensions or options handed to an estimator or scenario.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (e.g. quantile at p = 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tomo

#endif  // TOMO_ERROR_HPP
