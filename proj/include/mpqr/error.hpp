#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpqr {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A triangular factor has an exactly zero diagonal entry.
class SingularTriangularError : public Error {
 public:
  explicit SingularTriangularError(std::size_t index)
      : Error("singular triangular factor: zero diagonal at index " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A Gram-Schmidt pivot fell below the rank tolerance.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(std::size_t column, double pivot, double tolerance)
      : Error("rank deficiency at column " + std::to_string(column) + " (pivot norm " +
              std::to_string(pivot) + " <= tolerance " + std::to_string(tolerance) + ")"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Cholesky of the normal equations broke down.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpqr
