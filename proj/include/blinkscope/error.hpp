#pragma once

#include <stdexcept>
#include <string>

namespace blinkscope {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad file, bad parameter, unknown id).
/// The CLI maps these to exit code 1.
class InputError : public Error {
public:
  using Error::Error;
};

/// Six landmarks whose horizontal extent is zero.
class DegenerateGeometry : public InputError {
public:
  using InputError::InputError;
};

/// A value set that cannot be split into two classes.
class DegenerateDistribution : public InputError {
public:
  using InputError::InputError;
};

/// A named CSV column that is not in the header.
class MissingColumn : public InputError {
public:
  MissingColumn(const std::string& column)
      : InputError("missing column: " + column), column_(column) {}

  const std::string& column() const noexcept { return column_; }

private:
  std::string column_;
};

/// Filesystem failure while writing an output.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace blinkscope
