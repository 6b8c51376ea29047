#pragma once

#include <bit>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bmips/matrix.hpp"

namespace bmips {

/// Signed counting histogram over rows.
///
/// Sparse (hash map) when the sample budget is below n/2, dense (length-n
/// counter array) otherwise. Both answer every query identically.
///
/// Dense counters start at -0.0, which marks a row as untouched. add() turns
/// a -0.0 amount into +0.0 and IEEE addition never yields -0.0 from a +0.0 or
/// nonzero operand, so a touched counter can never read -0.0 again, even when
/// its credits cancel. This keeps the hot path to a single read-modify-write.
class Histogram {
 public:
  enum class Representation { Sparse, Dense };

  Histogram(std::size_t n, Representation repr);

  /// Representation chosen from the number of samples the caller will spend.
  static Histogram for_budget(std::size_t n, std::uint64_t samples);

  void add(RowId row, double amount) {
    if (repr_ == Representation::Dense)
      dense_[row] += amount + 0.0;
    else
      sparse_[row] += amount;
  }

  /// 0 for untouched rows.
  double at(RowId row) const;
  bool touched(RowId row) const;
  /// O(n) for dense histograms.
  std::size_t touched_count() const noexcept;
  bool empty() const noexcept { return touched_count() == 0; }

  std::size_t rows() const noexcept { return n_; }
  Representation representation() const noexcept { return repr_; }

  /// Set when the sampler received a degenerate query and produced nothing.
  bool degenerate() const noexcept { return degenerate_; }
  void mark_degenerate() noexcept { degenerate_ = true; }

  /// Visits every touched row once. Dense histograms go in ascending row
  /// order; sparse ones in unspecified order.
  template <typename F>
  void for_each(F&& f) const {
    if (repr_ == Representation::Dense) {
      for (std::size_t r = 0; r < n_; ++r)
        if (!untouched(dense_[r])) f(static_cast<RowId>(r), dense_[r]);
    } else {
      for (const auto& [r, v] : sparse_) f(r, v);
    }
  }

  /// Dense only: calls f(row, value) in ascending row order for each touched
  /// row whose counter exceeds `floor`. The callback may raise `floor`.
  template <typename F>
  void scan_above(const double& floor, F&& f) const {
    // Untouched -0.0 fails the first test whenever floor >= 0, so the touched
    // check only runs on the rare rows that pass it.
    for (std::size_t r = 0; r < n_; ++r) {
      const double v = dense_[r];
      if (v > floor && !untouched(v)) f(static_cast<RowId>(r), v);
    }
  }

  /// Touched rows with their counters, ascending by row.
  std::vector<std::pair<RowId, double>> entries() const;

 private:
  static constexpr std::uint64_t kUntouched = std::bit_cast<std::uint64_t>(-0.0);
  static bool untouched(double v) noexcept { return std::bit_cast<std::uint64_t>(v) == kUntouched; }

  std::size_t n_;
  Representation repr_;
  bool degenerate_ = false;
  std::vector<double> dense_;
  std::unordered_map<RowId, double> sparse_;
};

}  // namespace bmips
