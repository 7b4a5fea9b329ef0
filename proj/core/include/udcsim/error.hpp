#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace udc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (calibration tables, scenario files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An argument violated a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The storage array has failed and cannot serve requests.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), message_(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t line_;
};

// Collects every validation failure of a scenario before reporting.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems) {
      out += "\n  - ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace udc
