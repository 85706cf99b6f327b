#pragma once

#include <stdexcept>
#include <string>

namespace garnet {

// Base of every error raised by the library. The CLI maps all of them to
// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside an operation's domain (shape mismatch,
// negative distance, non-positive bandwidth, empty input).
class InputError : public Error {
 public:
  using Error::Error;
};

// A dataset, manifest, or run configuration cannot support the request.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity reached a place where it would corrupt state.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. The message names the file and byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace garnet
