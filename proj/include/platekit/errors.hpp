#pragma once

#include <stdexcept>
#include <string>

namespace platekit {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate boxes, collinear correspondences, points at infinity.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed label/detection text. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Malformed or unsupported image streams.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Text does not fit the plate layout, or a glyph is missing.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Undefined metric denominators (no ground truth, empty corpus).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures surfaced through the library.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace platekit
