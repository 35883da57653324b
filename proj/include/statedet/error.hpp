#pragma once

#include <stdexcept>
#include <string>

namespace statedet {

// Exception hierarchy. The CLI maps each family onto an exit code:
// IoError -> 1, ConfigError -> 2, NumericError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file content (ragged rows, non-numeric cells, bad schema).
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Window / band / series sizes that cannot satisfy an operation.
class SizingError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Shape disagreement between a model and the data handed to it.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace statedet
