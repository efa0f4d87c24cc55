#pragma once

#include <stdexcept>
#include <string>

namespace provex {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized document (not valid JSON, truncated image, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed document that violates the expected schema. The message names
// the offending field, e.g. "layers[1].bias".
class SchemaError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

// LayerBounds (or an abstraction built from them) used against a network or a
// query box they were not computed for.
class StaleBoundsError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace provex
