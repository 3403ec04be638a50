#pragma once

#include <stdexcept>
#include <string>

namespace nosac {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidDelayError : public Error {
public:
  using Error::Error;
};

class HistoryUnderrunError : public Error {
public:
  using Error::Error;
};

// Raised when an environment or trainer is driven out of order.
class ProtocolError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class LookupError : public Error {
public:
  using Error::Error;
};

// A pipeline step was asked to run before the step that produces its input.
class DependencyError : public Error {
public:
  using Error::Error;
};

} // namespace nosac
