#pragma once

#include <stdexcept>
#include <string>

namespace courtfusion {

/// Base class for every error raised by the library. Input errors (bad files,
/// bad geometry supplied by the user) and pipeline errors are distinguished so
/// the CLI can map them onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_input_error() const noexcept { return false; }
};

class InputError : public Error {
 public:
  using Error::Error;
  bool is_input_error() const noexcept override { return true; }
};

// geometry
class DegenerateConfiguration : public InputError {
 public:
  using InputError::InputError;
};
class PointAtInfinity : public Error {
 public:
  using Error::Error;
};
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// features
class ImageTooSmall : public InputError {
 public:
  using InputError::InputError;
};
class WindowOutOfBounds : public InputError {
 public:
  using InputError::InputError;
};
class BadGeometry : public InputError {
 public:
  using InputError::InputError;
};
class LengthMismatch : public InputError {
 public:
  using InputError::InputError;
};
class ZeroVector : public Error {
 public:
  using Error::Error;
};

// tracker
class ZeroVariance : public Error {
 public:
  using Error::Error;
};
class NonMonotonicFrame : public Error {
 public:
  using Error::Error;
};

// reid
class UnknownTrack : public Error {
 public:
  using Error::Error;
};
class TrackAlreadyBound : public Error {
 public:
  using Error::Error;
};
class NoObservationForEntry : public Error {
 public:
  using Error::Error;
};

// file formats
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace courtfusion
