#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace headprune {

// Exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kOracleFailure = 3,
  kInvariantViolation = 4,
};

/// Raised for malformed or inconsistent configuration. Carries every
/// violated field rather than only the first one found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message)
      : std::runtime_error(message), problems_{message} {}
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A head index outside the geometry.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Evaluation failed: table miss, evaluator error frame, broken pipe.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace headprune
