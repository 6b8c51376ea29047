#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmips/index.hpp"
#include "bmips/matrix.hpp"
#include "bmips/ranking.hpp"

namespace bmips {

/// One pop of the greedy screening, exposed for inspection.
struct GreedyPop {
  RowId row;
  std::uint32_t dim;
  double score;  // q_j * x_ij
};

/// Greedy-MIPS screening. One cursor per dimension with q_j != 0 walks
/// signed_order(j) from the end that maximizes q_j x_ij; a d-way heap pops the
/// globally largest q_j x_ij. The first B distinct rows form the candidates.
CandidateSet greedy_candidates(const MipsIndex& index, std::span<const double> q, std::size_t B);

/// Same walk, returning every pop (including repeats of already-seen rows)
/// until B distinct rows are collected or all cursors are exhausted.
std::vector<GreedyPop> greedy_pop_trace(const MipsIndex& index, std::span<const double> q,
                                        std::size_t B);

/// SimpleLSH model: rows mapped to unit vectors in d+1 dimensions by
/// x -> (x/m, sqrt(1 - |x|^2/m^2)), then encoded as sign bits of h random
/// Gaussian projections.
class LshModel {
 public:
  std::size_t rows() const noexcept { return n_; }
  std::size_t dims() const noexcept { return d_; }
  std::size_t code_bits() const noexcept { return h_; }
  std::size_t words_per_code() const noexcept { return words_; }
  double max_norm() const noexcept { return m_; }

  /// Augmented coordinate sqrt(1 - |x_i|^2/m^2) of row i.
  double augmented(std::size_t i) const noexcept { return augmented_[i]; }

  /// Row i of the data mapped into d+1 dimensions.
  std::vector<double> transform_row(const DataMatrix& X, std::size_t i) const;
  /// Query mapped to (q/|q|_2, 0).
  static std::vector<double> transform_query(std::span<const double> q);

  /// Packed sign code of an arbitrary (d+1)-vector.
  std::vector<std::uint64_t> encode(std::span<const double> v) const;

  std::span<const std::uint64_t> data_code(std::size_t i) const noexcept {
    return {codes_.data() + i * words_, words_};
  }

  friend LshModel lsh_build(const DataMatrix& X, std::size_t h, std::uint64_t seed);

 private:
  std::size_t n_ = 0, d_ = 0, h_ = 0, words_ = 0;
  double m_ = 0.0;
  std::vector<double> augmented_;
  std::vector<double> hyperplanes_;  // h x (d+1), row-major
  std::vector<std::uint64_t> codes_;
};

/// Throws std::invalid_argument when h == 0 or every row is zero.
LshModel lsh_build(const DataMatrix& X, std::size_t h, std::uint64_t seed);

std::size_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept;

/// Rows ranked by ascending Hamming distance to the encoded query (ties by
/// row), first B returned.
CandidateSet lsh_candidates(const LshModel& model, std::span<const double> q, std::size_t B);

}  // namespace bmips
