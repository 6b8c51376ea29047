#include "bmips/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace bmips {

namespace {

std::string located(const std::string& what, long long row, long long col) {
  if (row < 0) return what;
  std::string s = what + " at row " + std::to_string(row);
  if (col >= 0) s += ", column " + std::to_string(col);
  return s;
}

}  // namespace

DataError::DataError(const std::string& what, long long row, long long col)
    : std::runtime_error(located(what, row, col)), row_(row), col_(col) {}

DataMatrix::DataMatrix(std::size_t n, std::size_t d, std::vector<float> values)
    : n_(n), d_(d), values_(std::move(values)) {
  if (n_ == 0 || d_ == 0) throw DataError("matrix must have at least one row and one column");
  if (values_.size() / d_ != n_ || values_.size() % d_ != 0)
    throw DataError("matrix value count does not match " + std::to_string(n_) + "x" +
                    std::to_string(d_));
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]))
      throw DataError("non-finite entry", static_cast<long long>(k / d_),
                      static_cast<long long>(k % d_));
  }
}

DataMatrix::DataMatrix(std::initializer_list<std::initializer_list<float>> rows) {
  std::size_t n = rows.size();
  std::size_t d = n ? rows.begin()->size() : 0;
  std::vector<float> values;
  values.reserve(n * d);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != d) throw DataError("ragged row", static_cast<long long>(i));
    values.insert(values.end(), r.begin(), r.end());
    ++i;
  }
  *this = DataMatrix(n, d, std::move(values));
}

std::vector<float> DataMatrix::column(std::size_t j) const {
  std::vector<float> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = values_[i * d_ + j];
  return out;
}

double dot(std::span<const float> row, std::span<const double> q) noexcept {
  double acc = 0.0;
  const std::size_t d = row.size();
  const float* x = row.data();
  const double* y = q.data();
#pragma omp simd reduction(+ : acc)
  for (std::size_t j = 0; j < d; ++j) acc += static_cast<double>(x[j]) * y[j];
  return acc;
}

void check_query(std::span<const double> q, std::size_t d) {
  if (q.size() != d)
    throw std::invalid_argument("query has " + std::to_string(q.size()) +
                                " dimensions, data has " + std::to_string(d));
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!std::isfinite(q[j]))
      throw std::invalid_argument("non-finite query entry at dimension " + std::to_string(j));
  }
}

}  // namespace bmips
