#ifndef TERRAPERM_ERROR_H_
#define TERRAPERM_ERROR_H_

#include <stdexcept>
#include <string>

namespace terraperm {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable raster/vector/CSV input. Messages carry "path:line:".
class ParseError : public Error {
 public:
  using Error::Error;
};

// Two grids that must share geometry do not.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Precondition on an argument violated (bad offset, empty include set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Pipeline configuration failed validation; the message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage input artifact is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace terraperm

#endif  // TERRAPERM_ERROR_H_
