#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bratteli/rational.hpp"

namespace bratteli {

/// Raised when a diagram fails validation (dimension chain, missing incoming edges, ...).
class DiagramError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range or malformed arguments to an operation.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation refuses to run because the diagram lacks a required property.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two paths that are not tail equivalent at the same level were compared.
class IncomparablePaths : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exhaustive enumeration would exceed its configured cap.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(const std::string& what_enumerated, BigInt required, BigInt cap)
      : std::runtime_error(what_enumerated + " requires " + to_string(required) +
                           " cases, cap is " + to_string(cap)),
        required_(std::move(required)),
        cap_(std::move(cap)) {}

  const BigInt& required() const noexcept { return required_; }
  const BigInt& cap() const noexcept { return cap_; }

 private:
  BigInt required_;
  BigInt cap_;
};

}  // namespace bratteli
