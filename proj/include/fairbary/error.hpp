#pragma once

#include <stdexcept>
#include <string>

namespace fairbary {

// Error categories map one-to-one onto CLI exit codes (see exit_code()).
enum class ErrorKind {
  kInput = 2,       // unparsable input, missing columns, too few groups
  kDomain = 3,      // values outside their mathematical domain
  kInfeasible = 4,  // empty constraint set (slope boxes, L <= 1)
  kSchema = 5,      // data/bundle shape mismatch, unknown labels
  kSidecar = 6,     // malformed truth sidecar
  kSweepBudget = 7, // too many failed sweep cells
  kConfig = 8,      // invalid configuration (mapped to exit 2 by the CLI)
  kInternal = 9,    // violated internal invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error(ErrorKind::kInfeasible, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::kSchema, what) {}
};

class SidecarError : public Error {
 public:
  explicit SidecarError(const std::string& what) : Error(ErrorKind::kSidecar, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorKind::kInternal, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kInternal:
      return 1;
    default:
      return static_cast<int>(kind);
  }
}

}  // namespace fairbary
