#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmips {

using RowId = std::uint32_t;

/// Raised for malformed input data. Carries the offending location when one
/// exists (row/column are -1 otherwise).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, long long row = -1, long long col = -1);

  long long row() const noexcept { return row_; }
  long long col() const noexcept { return col_; }

 private:
  long long row_;
  long long col_;
};

/// Dense n x d item matrix. Entries are stored as 32-bit floats in row-major
/// order; every accumulation over them is done in double precision.
class DataMatrix {
 public:
  DataMatrix() = default;

  /// Takes ownership of `values` (row-major, n*d entries). Throws DataError on
  /// an empty shape, a size mismatch or a non-finite entry.
  DataMatrix(std::size_t n, std::size_t d, std::vector<float> values);

  /// Convenience for small literal matrices, mostly used by tests.
  DataMatrix(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return d_; }

  float at(std::size_t i, std::size_t j) const noexcept { return values_[i * d_ + j]; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * d_, d_};
  }

  /// Column slice j, n values in row order.
  std::vector<float> column(std::size_t j) const;

  std::span<const float> data() const noexcept { return values_; }

  bool operator==(const DataMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> values_;
};

/// Dot product of a stored row with a query, accumulated in double. Every exact
/// inner product in the library goes through this kernel so that products
/// computed on different paths compare equal bit for bit.
double dot(std::span<const float> row, std::span<const double> q) noexcept;

/// Validates a query against a dimension: length and finiteness.
void check_query(std::span<const double> q, std::size_t d);

/// Sign with sgn(0) = +1.
constexpr double sign_of(double v) noexcept { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace bmips
