#pragma once

#include <stdexcept>
#include <string>

namespace staticmap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedFile : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// The flat-ground assumption failed for a frame.
class DegenerateGround : public Error {
 public:
  using Error::Error;
};

class EmptyGround : public Error {
 public:
  using Error::Error;
};

class NoCorrespondences : public Error {
 public:
  using Error::Error;
};

class RegistrationFailed : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NoOverlap : public Error {
 public:
  using Error::Error;
};

}  // namespace staticmap
