#pragma once

#include <stdexcept>
#include <string>

namespace wikityper {

// Base for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, malformed user data, broken invariants. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Gold and prediction sequences that do not line up.
class AlignmentError : public ValidationError {
 public:
  AlignmentError(const std::string& what, std::size_t index)
      : ValidationError(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Filesystem failures. CLI exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

// Transport-level failures talking to the MediaWiki API. CLI exit code 2.
class NetworkError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace wikityper
