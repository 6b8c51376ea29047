#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bmips/histogram.hpp"
#include "bmips/matrix.hpp"

namespace bmips {

/// Up to B rows selected by a screening method, best first.
struct CandidateSet {
  std::vector<RowId> rows;
  std::string origin;
};

struct ScoredRow {
  RowId row;
  double score;

  bool operator==(const ScoredRow&) const = default;
};

/// Ordering used everywhere: larger score first, then smaller row.
constexpr bool ranks_before(const ScoredRow& a, const ScoredRow& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.row < b.row);
}

/// Top-k rows with their exact inner products, sorted by ranks_before.
struct TopKResult {
  std::vector<ScoredRow> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::vector<RowId> rows() const;
  bool operator==(const TopKResult&) const = default;
};

/// Bounded selection of the best `k` scored rows. Keeps a min-heap of size k
/// keyed on ranks_before, so feeding m items costs O(m log k).
class TopKSelector {
 public:
  explicit TopKSelector(std::size_t k);

  void push(RowId row, double score);
  /// Current admission threshold; meaningful only when full().
  const ScoredRow& worst() const noexcept { return heap_.front(); }
  bool full() const noexcept { return heap_.size() == k_; }

  /// Sorted best-first; leaves the selector empty.
  std::vector<ScoredRow> take_sorted();

 private:
  std::size_t k_;
  std::vector<ScoredRow> heap_;
};

/// The B largest counters among touched rows (all of them if fewer than B).
/// Untouched rows are never candidates.
CandidateSet extract_top_b(const Histogram& h, std::size_t B, std::string origin = {});

/// Exact inner products for each candidate, then top-k.
TopKResult rank_candidates(const DataMatrix& X, std::span<const double> q,
                           const CandidateSet& candidates, std::size_t k);

/// Exact top-k over all rows. Rows are split across OpenMP threads; each keeps
/// a local selector and the selectors are merged.
TopKResult brute_force_topk(const DataMatrix& X, std::span<const double> q, std::size_t k);

/// Single-threaded reference for brute_force_topk.
TopKResult brute_force_topk_serial(const DataMatrix& X, std::span<const double> q,
                                   std::size_t k);

}  // namespace bmips
