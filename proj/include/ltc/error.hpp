#pragma once

#include <stdexcept>
#include <string>

namespace ltc {

// Every library failure derives from Error. The CLI maps the three
// families below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, plans, or configuration files. Exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, degenerate geometry, undefined metrics. Exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Missing, truncated, or corrupted files. Exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

class IndexError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A transition operator with zero norm where a direction is required.
class DegenerateTransition : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateSchedule : public NumericError {
 public:
  using NumericError::NumericError;
};

class TraceExhausted : public IoError {
 public:
  using IoError::IoError;
};

class ChecksumMismatch : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace ltc
