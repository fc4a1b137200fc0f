#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "ramdepth/config.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

// Tensor shapes or configuration do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finite values are required.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry that cannot be normalized (all baselines zero).
class DegenerateBaselineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents; carries the byte offset where parsing stopped.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
