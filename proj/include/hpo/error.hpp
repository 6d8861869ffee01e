#pragma once

#include <stdexcept>
#include <string>

namespace hpo {

/// Base of every error raised by the library. The category drives the CLI
/// exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kData, kRuntime };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kConfig, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::kData, what) {}
};

/// A data-model invariant was violated (bad chunk index, alignment index out
/// of range, non-monotone delays, ...).
class StructuralError : public DataError {
 public:
  explicit StructuralError(const std::string& what) : DataError(what) {}
};

/// JSONL parse failure. Carries the 1-based line number and offending field.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, std::string field, const std::string& detail)
      : DataError("line " + std::to_string(line) + ": field '" + field + "': " + detail),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Failure that happened while running (numerics diverged, remote scorer
/// misbehaved, ...).
class RuntimeFailure : public Error {
 public:
  explicit RuntimeFailure(const std::string& what) : Error(Category::kRuntime, what) {}
};

/// Transport failure that exhausted its retries; retrying later may succeed.
class RetriableError : public RuntimeFailure {
 public:
  RetriableError(const std::string& what, int attempts)
      : RuntimeFailure(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// The remote peer answered with something that violates the wire protocol.
class ProtocolError : public RuntimeFailure {
 public:
  explicit ProtocolError(const std::string& what) : RuntimeFailure(what) {}
};

}  // namespace hpo
