#pragma once

#include <stdexcept>
#include <string>

namespace tirdet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or configuration value is invalid.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tensor or image dimensions do not agree.
class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A configuration document is malformed or contains unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system failure: missing file, unwritable path, short read.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where the numeric contract forbids it.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tirdet
