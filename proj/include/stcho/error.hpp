#ifndef STCHO_ERROR_HPP
#define STCHO_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stcho {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model was evaluated outside the region where it yields finite values.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Caller-supplied data violates a precondition (shape, range, emptiness).
class InputError : public Error {
public:
  using Error::Error;
};

/// A numerical self-check failed (e.g. non-negligible imaginary residue).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Observer training could not produce a usable template.
class TrainingError : public Error {
public:
  using Error::Error;
};

/// The dataset cannot be split into the requested reader subsets.
class PlanningError : public Error {
public:
  using Error::Error;
};

/// Lesion insertion lost too much energy to code-range clipping.
class ClippingError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed stack or dataset file. `offset()` is the byte position of the
/// first offending byte in the file that failed to parse.
class FormatError : public Error {
public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

}  // namespace stcho

#endif  // STCHO_ERROR_HPP
