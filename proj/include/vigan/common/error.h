#ifndef VIGAN_COMMON_ERROR_H_
#define VIGAN_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace vigan {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ModalityError : public Error {
 public:
  using Error::Error;
};

// Container decoding failures. The kind lets callers tell a corrupted file
// apart from one written by an incompatible version.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kVersionMismatch, kTruncated, kMalformed, kIo };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace vigan

#endif  // VIGAN_COMMON_ERROR_H_
