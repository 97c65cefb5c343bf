#pragma once
// Error types thrown across the library. Structural problems in loaded
// graphs are collected into ValidationReport (schema.hpp) instead of
// being thrown; everything here signals a hard failure of an operation.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spear {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Unknown name lookups (builtin schemas, encoder registries, ...).
class NotFoundError : public Error {
public:
  using Error::Error;
};

// Malformed input bytes. Carries the byte offset reported by the parser.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

private:
  std::size_t byte_offset_ = 0;
};

// Well-formed input that violates a data invariant. For corpus files the
// offending sentence index is attached (npos when not applicable).
class ValidationError : public Error {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  explicit ValidationError(const std::string& msg, std::size_t sentence_index = npos)
      : Error(msg), sentence_index_(sentence_index) {}
  std::size_t sentence_index() const { return sentence_index_; }

private:
  std::size_t sentence_index_ = npos;
};

// Inconsistent configuration: bad thresholds, dimension mismatches,
// unknown encoder kinds, checkpoint/schema fingerprint mismatches.
class ConfigError : public Error {
public:
  using Error::Error;
};

// A caller broke a documented precondition (e.g. a self-pair fed to the
// relation classifier).
class ContractViolation : public Error {
public:
  using Error::Error;
};

class DegenerateSplitError : public Error {
public:
  using Error::Error;
};

// Input exceeds the encoder's sequence limit. Carries the sub-word count.
class InputTooLongError : public Error {
public:
  InputTooLongError(const std::string& msg, std::size_t subword_count)
      : Error(msg), subword_count_(subword_count) {}
  std::size_t subword_count() const { return subword_count_; }

private:
  std::size_t subword_count_ = 0;
};

class EmptyPoolError : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
public:
  using Error::Error;
};

class AlignmentError : public Error {
public:
  using Error::Error;
};

class MergeError : public Error {
public:
  using Error::Error;
};

}  // namespace spear
