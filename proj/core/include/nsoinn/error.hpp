#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nsoinn {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data: dataset files, encodings, snapshots.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A library precondition or internal invariant was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Snapshot payload failed its integrity check or ended early.
class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatchError : public DataError {
 public:
  VersionMismatchError(std::string what_kind, std::uint32_t found, std::uint32_t expected)
      : DataError(what_kind + " version mismatch: found " + std::to_string(found) +
                  ", expected " + std::to_string(expected)),
        found_(found),
        expected_(expected) {}

  std::uint32_t found() const noexcept { return found_; }
  std::uint32_t expected() const noexcept { return expected_; }

 private:
  std::uint32_t found_;
  std::uint32_t expected_;
};

}  // namespace nsoinn
