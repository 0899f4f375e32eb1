#pragma once

#include <stdexcept>
#include <string>

namespace ticketforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during a forward or backward pass.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t layer)
      : Error(what), layer_(layer) {}
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or artifact file; carries the byte offset of the fault.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ticketforge
