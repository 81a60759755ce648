#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace grushin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad grid, missing Taylor data, missing callbacks.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Two grid resolutions disagree beyond tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double coarse, double fine)
      : Error(what), coarse_(coarse), fine_(fine) {}
  double coarse() const { return coarse_; }
  double fine() const { return fine_; }

 private:
  double coarse_;
  double fine_;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCaseError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset,
             std::vector<std::string> expected, std::string lexeme)
      : Error(format(message, offset, expected, lexeme)),
        message_(message),
        offset_(offset),
        expected_(std::move(expected)),
        lexeme_(std::move(lexeme)) {}

  const std::string& message() const { return message_; }
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }
  const std::string& lexeme() const { return lexeme_; }

 private:
  static std::string format(const std::string& message, std::size_t offset,
                            const std::vector<std::string>& expected,
                            const std::string& lexeme) {
    std::string out = "at offset " + std::to_string(offset) + ": " + message;
    if (!lexeme.empty()) out += " near '" + lexeme + "'";
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t k = 0; k < expected.size(); ++k) {
        if (k) out += ", ";
        out += expected[k];
      }
      out += ")";
    }
    return out;
  }

  std::string message_;
  std::size_t offset_;
  std::vector<std::string> expected_;
  std::string lexeme_;
};

// Well-formed input outside the requested mode, e.g. `i` in an exact polynomial.
class ModeViolationError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace grushin
