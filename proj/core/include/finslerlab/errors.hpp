#pragma once

#include <stdexcept>
#include <string>

namespace finslerlab {

enum class ErrorKind {
  kDomain,                 // precondition or dimension violation
  kConfig,                 // malformed scenario document
  kEvaluation,             // non-finite function value at a probe point
  kNumericalInstability,   // solver disagreement, unresolved quadrature, non-convergence
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error(ErrorKind::kEvaluation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumericalInstability, what) {}
};

/// Configuration failure; `field_path()` is a JSON-pointer-like path ("/bundle/rank").
class ConfigError : public Error {
 public:
  ConfigError(std::string field_path, const std::string& what)
      : Error(ErrorKind::kConfig, field_path + ": " + what), path_(std::move(field_path)) {}
  const std::string& field_path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace finslerlab
