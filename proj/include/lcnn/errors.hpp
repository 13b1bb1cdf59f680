#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lcnn {

// Shapes or widths that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Token or row index outside its table.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Caller broke a precondition that is not about shapes (non-scalar loss,
// beam width zero, empty record, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyVocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values in losses or gradients.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation declined to run, e.g. an exhaustive search that is too large.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration key or value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Checkpoint files that are missing, inconsistent with each other, or do
// not match the vocabulary.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcnn
