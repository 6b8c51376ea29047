#include "bmips/ranking.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace bmips {

namespace {

// Heap comparator putting the worst-ranked entry at the front.
constexpr auto kWorstOnTop = [](const ScoredRow& a, const ScoredRow& b) {
  return ranks_before(a, b);
};

// One integer per entry whose ascending order is ranks_before order
// (descending score, then ascending row). Sorting these avoids the
// data-dependent branches of the two-field comparison.
using RankKey = unsigned __int128;
constexpr std::uint64_t kTopBit = std::uint64_t{1} << 63;

RankKey rank_key(RowId row, double score) {
  auto bits = std::bit_cast<std::uint64_t>(score + 0.0);  // -0.0 and +0.0 tie
  bits = (bits & kTopBit) ? ~bits : bits | kTopBit;        // order-preserving
  return (static_cast<RankKey>(~bits) << 64) | row;
}

ScoredRow from_key(RankKey key) {
  const auto bits = ~static_cast<std::uint64_t>(key >> 64);
  const auto raw = (bits & kTopBit) ? bits & ~kTopBit : ~bits;
  return {static_cast<RowId>(static_cast<std::uint64_t>(key)), std::bit_cast<double>(raw)};
}

}  // namespace

std::vector<RowId> TopKResult::rows() const {
  std::vector<RowId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.row);
  return out;
}

TopKSelector::TopKSelector(std::size_t k) : k_(k) {
  if (k_ == 0) throw std::invalid_argument("top-k selection needs k >= 1");
  heap_.reserve(k_);
}

void TopKSelector::push(RowId row, double score) {
  const ScoredRow item{row, score};
  if (heap_.size() < k_) {
    heap_.push_back(item);
    std::push_heap(heap_.begin(), heap_.end(), kWorstOnTop);
  } else if (ranks_before(item, heap_.front())) {
    // Replace the root and sift down: one pass instead of pop plus push.
    const std::size_t size = heap_.size();
    std::size_t hole = 0;
    for (;;) {
      std::size_t child = 2 * hole + 1;
      if (child >= size) break;
      if (child + 1 < size && kWorstOnTop(heap_[child], heap_[child + 1])) ++child;
      if (!kWorstOnTop(item, heap_[child])) break;
      heap_[hole] = heap_[child];
      hole = child;
    }
    heap_[hole] = item;
  }
}

std::vector<ScoredRow> TopKSelector::take_sorted() {
  std::vector<RankKey> keys(heap_.size());
  for (std::size_t t = 0; t < heap_.size(); ++t) keys[t] = rank_key(heap_[t].row, heap_[t].score);
  heap_.clear();
  std::ranges::sort(keys);
  std::vector<ScoredRow> out(keys.size());
  for (std::size_t t = 0; t < keys.size(); ++t) out[t] = from_key(keys[t]);
  return out;
}

namespace {

constexpr double kNoFloor = -std::numeric_limits<double>::infinity();

// A counter value likely a little below the B-th largest, read from a fixed
// stride of rows. Only counters at or above it need to be ranked.
double sampled_floor(const Histogram& h, std::size_t B) {
  constexpr std::size_t kSample = 1024;
  const std::size_t n = h.rows();
  if (n < 8 * kSample) return kNoFloor;
  const std::size_t step = n / kSample;
  std::vector<double> seen;
  seen.reserve(n / step + 1);
  for (std::size_t r = 0; r < n; r += step)
    if (h.touched(static_cast<RowId>(r))) seen.push_back(h.at(static_cast<RowId>(r)));
  // Each sampled row stands for `step` rows; aim for about twice B above.
  const std::size_t rank = 2 * B / step + 2;
  if (rank >= seen.size()) return kNoFloor;
  std::nth_element(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(rank), seen.end(),
                   std::greater<>());
  return seen[rank];
}

// Keys of the touched rows with counter >= start.
std::vector<RankKey> keys_at_least(const Histogram& h, double start, std::size_t reserve) {
  std::vector<RankKey> keys;
  keys.reserve(reserve);
  h.scan_above(std::nextafter(start, kNoFloor),
               [&](RowId r, double v) { keys.push_back(rank_key(r, v)); });
  return keys;
}

}  // namespace

CandidateSet extract_top_b(const Histogram& h, std::size_t B, std::string origin) {
  if (B == 0) throw std::invalid_argument("candidate budget B must be >= 1");
  CandidateSet out;
  out.origin = std::move(origin);
  if (h.representation() == Histogram::Representation::Sparse) {
    TopKSelector sel(B);
    h.for_each([&](RowId r, double v) { sel.push(r, v); });
    for (const auto& e : sel.take_sorted()) out.rows.push_back(e.row);
    return out;
  }
  // With at least B keys at or above the floor, the B best are among them:
  // every skipped counter is below the floor and so below the B-th key.
  // Otherwise rank every touched row.
  const double start = sampled_floor(h, B);
  std::vector<RankKey> keys = keys_at_least(h, start, 4 * B);
  if (keys.size() < B && start != kNoFloor) keys = keys_at_least(h, kNoFloor, 4 * B);
  const std::size_t m = std::min(B, keys.size());
  const auto mid = keys.begin() + static_cast<std::ptrdiff_t>(m);
  std::nth_element(keys.begin(), mid, keys.end());
  std::sort(keys.begin(), mid);
  out.rows.reserve(m);
  for (auto it = keys.begin(); it != mid; ++it) out.rows.push_back(from_key(*it).row);
  return out;
}

TopKResult rank_candidates(const DataMatrix& X, std::span<const double> q,
                           const CandidateSet& candidates, std::size_t k) {
  check_query(q, X.cols());
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  TopKResult out;
  if (candidates.rows.empty()) return out;
  const auto& rows = candidates.rows;
  for (RowId r : rows)
    if (r >= X.rows()) throw std::out_of_range("candidate row out of range");
  // Candidate rows are scattered; fetch a few ahead of the dot products.
  constexpr std::size_t kAhead = 4;
  const std::size_t row_bytes = X.cols() * sizeof(float);
  const auto prefetch = [&](RowId r) {
    const auto* p = reinterpret_cast<const char*>(X.row(r).data());
    for (std::size_t b = 0; b < row_bytes; b += 64) __builtin_prefetch(p + b);
  };
  for (std::size_t t = 0; t < std::min(kAhead, rows.size()); ++t) prefetch(rows[t]);
  TopKSelector sel(k);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (t + kAhead < rows.size()) prefetch(rows[t + kAhead]);
    sel.push(rows[t], dot(X.row(rows[t]), q));
  }
  out.entries = sel.take_sorted();
  return out;
}

TopKResult brute_force_topk_serial(const DataMatrix& X, std::span<const double> q,
                                   std::size_t k) {
  check_query(q, X.cols());
  TopKSelector sel(k);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double s = dot(X.row(i), q);
    if (!sel.full() || s >= sel.worst().score) sel.push(static_cast<RowId>(i), s);
  }
  return TopKResult{sel.take_sorted()};
}

TopKResult brute_force_topk(const DataMatrix& X, std::span<const double> q, std::size_t k) {
  check_query(q, X.cols());
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const auto n = static_cast<long long>(X.rows());
  // Small problems are not worth a parallel region.
  if (omp_get_max_threads() == 1 || n * static_cast<long long>(X.cols()) < (1 << 16))
    return brute_force_topk_serial(X, q, k);

  std::vector<std::vector<ScoredRow>> partial;
#pragma omp parallel
  {
#pragma omp single
    partial.resize(static_cast<std::size_t>(omp_get_num_threads()));
    TopKSelector sel(k);
#pragma omp for schedule(static)
    for (long long i = 0; i < n; ++i) {
      const double s = dot(X.row(static_cast<std::size_t>(i)), q);
      if (!sel.full() || s >= sel.worst().score) sel.push(static_cast<RowId>(i), s);
    }
    partial[static_cast<std::size_t>(omp_get_thread_num())] = sel.take_sorted();
  }
  TopKSelector merged(k);
  for (const auto& part : partial)
    for (const auto& e : part) merged.push(e.row, e.score);
  return TopKResult{merged.take_sorted()};
}

}  // namespace bmips
