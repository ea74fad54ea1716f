#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afdiag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Objects that should share a dimension do not.
class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A value required by the computation is missing or non-finite.
class DataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The computation has no well-defined result (empty kept cross-section,
/// all-zero residual row, zero spectrum).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Penalty-constant calibration could not find the requested stability
/// interval.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::size_t intervals_found)
      : Error(what), intervals_found_(intervals_found) {}
  std::size_t intervals_found() const noexcept { return intervals_found_; }

 private:
  std::size_t intervals_found_;
};

}  // namespace afdiag
