#pragma once

#include <stdexcept>
#include <string>

namespace swapnet {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/matrix extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An algorithm was asked to run a configuration outside its preconditions
// (e.g. winograd on a 5x5 kernel).
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

class UnknownAlgorithm : public Error {
 public:
  using Error::Error;
};

// "custom" was requested while more than one custom entry exists.
class AmbiguousCustom : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

// Malformed model document, broken shape chain or weight length mismatch.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace swapnet
