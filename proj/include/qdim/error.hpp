#pragma once

#include <stdexcept>
#include <string>

namespace qdim {

/// Process exit codes shared by the CLI and the error hierarchy.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config_error = 2,
  resource_limit = 3,
  insufficient_data = 4,
  no_root = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode code() const noexcept { return ExitCode::failure; }
};

/// Malformed argument or violated precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::config_error; }
};

/// Enumeration or sampling budget exceeded.
class ResourceLimit : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::resource_limit; }
};

class InsufficientData : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::insufficient_data; }
};

/// Root finder could not bracket a sign change.
class NoRoot : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::no_root; }
};

/// Truncated rays failed to resolve their joins too often.
class DepthInsufficient : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::insufficient_data; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::config_error; }
};

}  // namespace qdim
