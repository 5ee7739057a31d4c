#pragma once

#include <stdexcept>
#include <string>

namespace coupon {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON syntax, wrong key types, unknown keys).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An exhaustive routine was asked to enumerate more than it is allowed to.
class LimitError : public Error {
 public:
  using Error::Error;
};

// LP breakdown, failed optimality certificate, or other floating point trouble.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inconsistent solver configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace coupon
