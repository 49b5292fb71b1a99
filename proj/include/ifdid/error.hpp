#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ifdid {

// Out-of-range or inconsistent parameters. Raised before any work is done.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& path, const std::string& what = "cannot open")
      : std::runtime_error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Malformed file content; `line` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidWeightsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UndefinedInformationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SetOverlapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EndOfStreamError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ifdid
