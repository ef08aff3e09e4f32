#pragma once

#include <stdexcept>
#include <string>

namespace motionrocket {

/// Invalid input data: malformed files, label violations, degenerate training sets.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Window or feature dimensions that disagree with a fitted model.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model file could not be decoded (magic, version, truncation).
class ModelFormatError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace motionrocket
