#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace raf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  explicit NumericFault(const std::string& what)
      : Error(what), node_(static_cast<std::size_t>(-1)) {}

  /// Graph node that produced the fault, or SIZE_MAX when not graph-related.
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// Reference signal carries no energy, so a relative measure is undefined.
class DegenerateReference : public Error {
 public:
  using Error::Error;
};

/// An embedding collapsed to zero norm and cannot be normalized.
class DegenerateEmbedding : public Error {
 public:
  using Error::Error;
};

/// A calibration batch produced a zero component mean.
class DegenerateCalibration : public Error {
 public:
  using Error::Error;
};

/// Training produced non-finite losses and was aborted.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Configuration could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

#define RAF_REQUIRE(cond, msg)                     \
  do {                                             \
    if (!(cond)) throw ::raf::ContractViolation(msg); \
  } while (0)

}  // namespace raf
