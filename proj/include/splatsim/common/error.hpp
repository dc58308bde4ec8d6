#pragma once

#include <stdexcept>
#include <string>

namespace splatsim {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain parameter handed to a numeric routine.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A projected splat whose 2D covariance cannot be inverted.
class DegenerateSplat : public Error {
 public:
  using Error::Error;
};

/// Two images or maps that must share a resolution do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A loss or statistic has no pixels/patches left to average over.
class EmptySupport : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Environment used out of order (step before reset, step after terminal, ...).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace splatsim
