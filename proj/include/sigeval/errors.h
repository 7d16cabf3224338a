#ifndef SIGEVAL_ERRORS_H_
#define SIGEVAL_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sigeval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Any failure to read a token stream or infix text. `position` is a token
// index for prefix input and a character offset for infix input.
class ParseError : public Error {
 public:
  enum class Code { kUnderflow, kTrailingTokens, kUnknownToken, kSyntax, kDivisionByZero };

  ParseError(Code code, std::size_t position, const std::string& what)
      : Error(what + " at position " + std::to_string(position)), code_(code), position_(position) {}

  Code code() const { return code_; }
  std::size_t position() const { return position_; }

 private:
  Code code_;
  std::size_t position_;
};

class DivisionByZero : public Error {
 public:
  DivisionByZero() : Error("division by zero") {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Model backend errors.
class ModelUnavailable : public Error {
 public:
  using Error::Error;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class ResponseTooLarge : public Error {
 public:
  using Error::Error;
};

class ScoringUnsupported : public Error {
 public:
  using Error::Error;
};

// Generator errors.
class RangeTooSmall : public Error {
 public:
  using Error::Error;
};

class NoGroundTruth : public Error {
 public:
  using Error::Error;
};

class EmptyPool : public Error {
 public:
  EmptyPool() : Error("composition pool is empty") {}
};

// Search errors.
class NoApplicableSite : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

}  // namespace sigeval

#endif  // SIGEVAL_ERRORS_H_
