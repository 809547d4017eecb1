#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace avt {

// Shape or extent mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Class index or position outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Invalid or inconsistent configuration (presets, dims, run settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed binary or text file. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Action id without a verb/noun mapping, or vocabularies that disagree.
class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prediction sets that do not cover the same sample ids.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or parameters during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not available for the model's backbone mode.
class UnsupportedModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace avt
