#pragma once

#include <stdexcept>
#include <string>

namespace rboxkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (non-convex quad, bad threshold, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Geometry is too degenerate for the requested quantity (zero-length side,
/// singular tangent).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  /// Same error, with the message prefixed by the file it came from.
  static ParseError in_file(const std::string& file, const ParseError& inner) {
    return ParseError(Tag{}, file + ": " + inner.what(), inner.line());
  }

  std::size_t line() const noexcept { return line_; }

 private:
  struct Tag {};
  ParseError(Tag, const std::string& full, std::size_t line) : Error(full), line_(line) {}

  std::size_t line_;
};

}  // namespace rboxkit
