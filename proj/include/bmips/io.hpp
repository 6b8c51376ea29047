#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmips/matrix.hpp"

namespace bmips {

enum class MatrixFormat { Csv, Dmat };

struct DatasetSpec {
  std::filesystem::path path;
  std::optional<MatrixFormat> format;  // from the extension when absent
  std::optional<std::size_t> expected_rows;
  std::optional<std::size_t> expected_cols;
};

/// ".csv" -> Csv, ".dmat" -> Dmat.
std::optional<MatrixFormat> format_from_path(const std::filesystem::path& path);

/// Reads a matrix and checks the declared shape. Errors are DataError with
/// the offending line (CSV) or row/column when known.
DataMatrix load_matrix(const DatasetSpec& spec);

DataMatrix parse_csv(std::istream& in);
DataMatrix parse_dmat(std::istream& in);

/// Shortest round-trip float formatting, one row per line.
void write_csv(const DataMatrix& X, std::ostream& out);
/// "DMAT", u32 version 1, u64 n, u64 d, n*d little-endian f32, row-major.
void write_dmat(const DataMatrix& X, std::ostream& out);

void save_matrix(const DataMatrix& X, const std::filesystem::path& path,
                 std::optional<MatrixFormat> format = std::nullopt);

/// Rows of a matrix as double vectors, the form queries are consumed in.
std::vector<std::vector<double>> rows_as_queries(const DataMatrix& Q);

enum class SyntheticModel { Gaussian, LowRankFactors };

std::optional<SyntheticModel> parse_synthetic_model(std::string_view name) noexcept;

struct SyntheticData {
  DataMatrix items;
  DataMatrix queries;
};

/// Gaussian: i.i.d. N(0,1) items and queries. LowRankFactors: items = A M and
/// users = U M with A, U, M Gaussian and M of shape rank x d, scaled by
/// 1/sqrt(rank), so items have rank <= `rank`. Deterministic in `seed`.
/// Throws std::invalid_argument on a bad shape.
SyntheticData gen_synthetic(SyntheticModel model, std::size_t n, std::size_t d,
                            std::size_t num_queries, std::size_t rank, std::uint64_t seed);

}  // namespace bmips
