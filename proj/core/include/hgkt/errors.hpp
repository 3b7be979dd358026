#pragma once

#include <stdexcept>
#include <string>

namespace hgkt {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or empty dimensions (vector lengths, matrix shapes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Overflow, underflow, NaN, or divergence in a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A class partition contains no instances.
class EmptyClassError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Required state (e.g. a representative embedding) is missing.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A prediction mode has no candidate entries.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; message carries the offending line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid file whose contents violate the declared schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Evaluation-protocol violation (e.g. unseen-class rows in training data).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgkt
