#pragma once

#include <stdexcept>
#include <string>

namespace selfvocab {

// Base class for all library errors. The CLI maps these to exit status 1;
// anything it classifies as a usage problem maps to exit status 2.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Parallel files (or hypothesis/reference sets) disagree on line counts.
class AlignmentError : public Error {
public:
  using Error::Error;
};

// Byte sequence is not valid UTF-8.
class DecodeError : public Error {
public:
  using Error::Error;
};

// A corpus split cannot give every part at least one pair.
class SizingError : public Error {
public:
  using Error::Error;
};

// An argument is outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// An operation that needs at least one element got none.
class EmptyInputError : public Error {
public:
  using Error::Error;
};

// A subword token carries the end-of-word marker anywhere but as a suffix.
class MalformedSegmentError : public Error {
public:
  using Error::Error;
};

// A model is used before it was trained.
class ModelStateError : public Error {
public:
  using Error::Error;
};

// An external command failed; message carries captured diagnostics.
class SubprocessError : public Error {
public:
  using Error::Error;
};

// A file does not follow its documented format.
class FormatError : public Error {
public:
  using Error::Error;
};

// File system level failure (missing file, unwritable path).
class IoError : public Error {
public:
  using Error::Error;
};

// Caller misuse: bad flags, unknown config keys, out-of-range options.
// The CLI maps this to exit status 2.
class UsageError : public Error {
public:
  using Error::Error;
};

} // namespace selfvocab
