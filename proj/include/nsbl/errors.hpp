#pragma once

#include <stdexcept>
#include <string>

namespace nsbl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// exponent ledger
class DomainError : public Error {
 public:
  using Error::Error;
};
class SearchExhausted : public Error {
 public:
  using Error::Error;
};
class DegenerateCoefficient : public Error {
 public:
  using Error::Error;
};

// spectral core
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};
class NotDivergenceFree : public Error {
 public:
  using Error::Error;
};
class BadExponent : public Error {
 public:
  using Error::Error;
};

// solver
class Instability : public Error {
 public:
  Instability(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};
class BadSpec : public Error {
 public:
  using Error::Error;
};

// audit
class DegenerateField : public Error {
 public:
  using Error::Error;
};
class ThresholdTooSmall : public Error {
 public:
  using Error::Error;
};
class BadExponents : public Error {
 public:
  using Error::Error;
};

// harness
class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsbl
