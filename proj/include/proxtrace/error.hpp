#pragma once

#include <stdexcept>
#include <string>

namespace proxtrace {

/// Error categories; each maps to one CLI exit code.
enum class ErrorKind {
  usage = 1,       // bad flags, invalid configuration
  data = 2,        // malformed files, protocol violations, scoring input errors
  divergence = 3,  // training produced non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Malformed event/key/output/sidecar text. `line` is 1-based, 0 when unknown.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorKind::divergence, what) {}
};

}  // namespace proxtrace
