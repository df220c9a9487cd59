#pragma once

#include <stdexcept>
#include <string>

namespace tsbdd {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A variable name that is not part of the relevant VarOrder.
class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& name)
      : Error("unknown variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Syntax or semantic error in formula or model text; line is 1-based (0 if
/// not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// The model violates a structural requirement.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two independent computations that must agree did not.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsbdd
