#pragma once

#include <stdexcept>
#include <string>

namespace lvlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::string field, std::string reason)
      : Error("constraint violated on " + field + ": " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class NonIntegrable : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergent : public Error {
 public:
  using Error::Error;
};

class ShapeParamOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnorderedInitial : public Error {
 public:
  using Error::Error;
};

class InsufficientPaths : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lvlab
