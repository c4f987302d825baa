#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ratingxva {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input lies outside the mathematical domain of an operation
/// (negative intensity, non-stochastic matrix, h_j = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operands with incompatible shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration detected before any computation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-finite values, breakdown).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system failures (missing file, unwritable directory).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t row, std::size_t column, const std::string& what)
      : Error(format(source, row, column, what)), source_(std::move(source)), row_(row), column_(column) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& source, std::size_t row, std::size_t column,
                            const std::string& what) {
    std::string msg = source;
    if (row > 0) msg += ":" + std::to_string(row);
    if (column > 0) msg += ":" + std::to_string(column);
    return msg + ": " + what;
  }

  std::string source_;
  std::size_t row_;
  std::size_t column_;
};

}  // namespace ratingxva
