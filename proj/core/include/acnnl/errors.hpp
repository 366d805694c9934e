#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace acnnl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A positive-definite factorization failed.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Input data violates a documented precondition (labels, counts, config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed binary input. offset() is the byte position where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace acnnl
