#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmips/alias_table.hpp"
#include "bmips/matrix.hpp"

namespace bmips {

/// Immutable, query-independent structure over a DataMatrix.
///
/// Per column j it holds the 1-norm c_j, two row permutations (by |x_ij| and by
/// signed x_ij, both descending, ties to the smaller row) and an alias table
/// drawing row i with probability |x_ij| / c_j. The matrix must outlive the
/// index.
class MipsIndex {
 public:
  const DataMatrix& source() const noexcept { return *source_; }
  std::size_t rows() const noexcept { return source_->rows(); }
  std::size_t cols() const noexcept { return source_->cols(); }

  std::span<const double> col_norms() const noexcept { return col_norms_; }
  double col_norm(std::size_t j) const noexcept { return col_norms_[j]; }

  /// False for all-zero columns; those have an empty alias table.
  bool sampleable(std::size_t j) const noexcept { return col_norms_[j] > 0.0; }

  std::span<const RowId> abs_order(std::size_t j) const noexcept {
    return {abs_order_.data() + j * rows(), rows()};
  }
  std::span<const RowId> signed_order(std::size_t j) const noexcept {
    return {signed_order_.data() + j * rows(), rows()};
  }

  /// Column j's entries permuted by abs_order(j). Not serialized: rebuilt from
  /// the matrix, it turns the sorted walk into a sequential scan.
  std::span<const float> abs_sorted_values(std::size_t j) const noexcept {
    return {abs_sorted_.data() + j * rows(), rows()};
  }

  const AliasTable& col_alias(std::size_t j) const noexcept { return col_alias_[j]; }

  /// K = max |x_ij|.
  double max_entry() const noexcept { return max_entry_; }

  friend MipsIndex build_index(const DataMatrix& X);
  friend MipsIndex build_index_serial(const DataMatrix& X);
  friend MipsIndex load_index(const std::filesystem::path& path, const DataMatrix& X);
  friend MipsIndex load_index(std::span<const std::byte> bytes, const DataMatrix& X);

 private:
  MipsIndex() = default;
  static MipsIndex build(const DataMatrix& X, bool parallel);
  void fill_derived();

  const DataMatrix* source_ = nullptr;
  std::vector<double> col_norms_;
  std::vector<RowId> abs_order_;
  std::vector<RowId> signed_order_;
  std::vector<float> abs_sorted_;
  std::vector<AliasTable> col_alias_;
  double max_entry_ = 0.0;
};

/// Builds the index in O(dn log n). Columns are processed in parallel; the
/// result does not depend on the thread count.
MipsIndex build_index(const DataMatrix& X);

/// Single-threaded build, kept as the reference for the parallel one.
MipsIndex build_index_serial(const DataMatrix& X);

/// Structural equality on the serialized parts (norms, orders, alias tables).
bool same_structure(const MipsIndex& a, const MipsIndex& b);

// Index file: "WIDX", u32 version, u64 n, u64 d, d x f64 col_norms,
// d*n x u32 abs_order, d*n x u32 signed_order, d*n x (f64 prob, u32 alias),
// u32 CRC32 of everything before it. All little-endian.

inline constexpr std::uint32_t kIndexFormatVersion = 1;

class IndexFormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, ShapeMismatch, Io };

  IndexFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::byte> serialize_index(const MipsIndex& index);
void save_index(const MipsIndex& index, const std::filesystem::path& path);

/// Loads an index saved for `X`; the stored shape must match X.
MipsIndex load_index(std::span<const std::byte> bytes, const DataMatrix& X);
MipsIndex load_index(const std::filesystem::path& path, const DataMatrix& X);

}  // namespace bmips
