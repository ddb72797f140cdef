#pragma once

#include <stdexcept>
#include <string>

namespace sstkg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed files, out-of-range values, bad configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A stored artifact failed its integrity check (bad JSON, hash mismatch, truncation).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A stored artifact was written with a schema version this reader does not understand.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace sstkg
