#pragma once

#include <stdexcept>
#include <string>

namespace behsynth {

// Error categories map one-to-one onto CLI exit statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or bad arguments (exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent, or insufficient data (exit 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Generator transport failure or replay exhaustion (exit 4).
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace behsynth
