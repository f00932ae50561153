#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mrbt {

/// A malformed scenario, tree or problem: unresolved ids, bad dimensions,
/// references to unknown robots. Distinct from a behavior returning Failure.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A syntax or reference error anchored to a line of an input file.
class ParseError : public ConfigError {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column, const std::string& message)
      : ConfigError(format(file, line, column, message)),
        file_(std::move(file)),
        line_(line),
        column_(column) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& file, std::size_t line, std::size_t column,
                            const std::string& message) {
    std::string out = file.empty() ? std::string("<input>") : file;
    out += ':' + std::to_string(line);
    if (column > 0) out += ':' + std::to_string(column);
    return out + ": " + message;
  }

  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

/// Raised when a single-robot tree cannot be mapped onto the fleet.
class TranslationError : public ConfigError {
 public:
  explicit TranslationError(const std::string& what) : ConfigError(what) {}
};

/// A broken internal contract (e.g. an incapable robot asked for a duration).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace mrbt
