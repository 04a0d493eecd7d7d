#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facetforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input at a known line (CoNLL-U, embedding files, dumps).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A CoNLL-U token surface that cannot be located in the sentence text.
class SpanError : public ParseError {
 public:
  using ParseError::ParseError;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Failure talking to an external model or scorer endpoint.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace facetforge
