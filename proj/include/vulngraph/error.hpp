#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace vulngraph {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input could not be read as the expected structured text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Data is well-formed but unusable for the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage needs an artifact that an earlier stage has not produced.
class StageError : public Error {
 public:
  StageError(const std::string& what, std::string required_command)
      : Error(what), command_(std::move(required_command)) {}

  const std::string& required_command() const noexcept { return command_; }

 private:
  std::string command_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vulngraph

#include <vector>

namespace vulngraph {

// Collects non-fatal findings (skipped entries, unknown categories) for the caller to log.
struct Diagnostics {
  std::vector<std::string> warnings;
  std::size_t skipped = 0;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace vulngraph
