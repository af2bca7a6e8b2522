#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracgamma {

enum class ErrorKind {
  DegenerateDomain,
  InvalidEnclosure,
  InvalidField,
  InvalidKernel,
  UnsupportedExponent,
  ConstraintViolation,
  SizeMismatch,
  InvalidArgument,
  InstanceTooLarge,
  Config,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateDomain: return "degenerate domain";
    case ErrorKind::InvalidEnclosure: return "invalid enclosure";
    case ErrorKind::InvalidField: return "invalid field";
    case ErrorKind::InvalidKernel: return "invalid kernel";
    case ErrorKind::UnsupportedExponent: return "unsupported exponent";
    case ErrorKind::ConstraintViolation: return "constraint violation";
    case ErrorKind::SizeMismatch: return "size mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InstanceTooLarge: return "instance too large";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Configuration error carrying the offending line (0 when not line-bound) and key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::string key = {})
      : Error(ErrorKind::Config, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace detail
}  // namespace fracgamma
