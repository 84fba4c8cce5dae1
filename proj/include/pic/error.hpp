#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pic {

/// Error families, each mapped to a distinct CLI exit code.
enum class ErrorCategory { Config, Runtime, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

/// Carries every violation found by a validation pass, not just the first.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems) out += "\n  - " + p;
    return out;
  }
  std::vector<std::string> problems_;
};

class SimulationError : public Error {
 public:
  explicit SimulationError(const std::string& what) : Error(ErrorCategory::Runtime, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace pic
