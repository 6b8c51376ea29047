#include "bmips/baselines.hpp"

#include <bit>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

#include "bmips/rng.hpp"

namespace bmips {

// ---- Greedy-MIPS ---------------------------------------------------------

namespace {

struct Cursor {
  double score;
  RowId row;
  std::uint32_t dim;
  std::uint32_t pos;  // steps taken along the walk
};

// Max-heap order: larger score, then smaller row, then smaller dimension.
struct CursorLess {
  bool operator()(const Cursor& a, const Cursor& b) const {
    if (a.score != b.score) return a.score < b.score;
    if (a.row != b.row) return a.row > b.row;
    return a.dim > b.dim;
  }
};

template <typename OnPop>
void greedy_walk(const MipsIndex& index, std::span<const double> q, std::size_t B, OnPop&& on_pop) {
  check_query(q, index.cols());
  if (B == 0) throw std::invalid_argument("candidate budget B must be >= 1");
  const DataMatrix& X = index.source();
  const std::size_t n = index.rows();

  const auto entry_at = [&](std::uint32_t j, std::uint32_t pos) -> RowId {
    const auto order = index.signed_order(j);
    // q_j > 0 walks from the largest x_ij, q_j < 0 from the smallest.
    return q[j] > 0.0 ? order[pos] : order[n - 1 - pos];
  };
  const auto make = [&](std::uint32_t j, std::uint32_t pos) {
    const RowId r = entry_at(j, pos);
    return Cursor{q[j] * static_cast<double>(X.at(r, j)), r, j, pos};
  };

  std::priority_queue<Cursor, std::vector<Cursor>, CursorLess> heap;
  for (std::uint32_t j = 0; j < index.cols(); ++j)
    if (q[j] != 0.0) heap.push(make(j, 0));

  std::vector<std::uint8_t> seen(n, 0);
  std::size_t distinct = 0;
  while (!heap.empty() && distinct < B) {
    const Cursor top = heap.top();
    heap.pop();
    const bool fresh = !seen[top.row];
    if (fresh) {
      seen[top.row] = 1;
      ++distinct;
    }
    on_pop(top, fresh);
    if (top.pos + 1 < n) heap.push(make(top.dim, top.pos + 1));
  }
}

}  // namespace

CandidateSet greedy_candidates(const MipsIndex& index, std::span<const double> q, std::size_t B) {
  CandidateSet out;
  out.origin = "greedy";
  greedy_walk(index, q, B, [&](const Cursor& c, bool fresh) {
    if (fresh) out.rows.push_back(c.row);
  });
  return out;
}

std::vector<GreedyPop> greedy_pop_trace(const MipsIndex& index, std::span<const double> q,
                                        std::size_t B) {
  std::vector<GreedyPop> trace;
  greedy_walk(index, q, B,
              [&](const Cursor& c, bool) { trace.push_back({c.row, c.dim, c.score}); });
  return trace;
}

// ---- SimpleLSH -----------------------------------------------------------

LshModel lsh_build(const DataMatrix& X, std::size_t h, std::uint64_t seed) {
  if (h == 0) throw std::invalid_argument("code length h must be >= 1");
  const std::size_t n = X.rows(), d = X.cols();

  LshModel m;
  m.n_ = n;
  m.d_ = d;
  m.h_ = h;
  m.words_ = (h + 63) / 64;

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (float v : X.row(i)) s += static_cast<double>(v) * v;
    norms[i] = std::sqrt(s);
    m.m_ = std::max(m.m_, norms[i]);
  }
  if (!(m.m_ > 0.0)) throw std::invalid_argument("SimpleLSH needs at least one non-zero row");

  m.augmented_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = norms[i] / m.m_;
    m.augmented_[i] = std::sqrt(std::max(0.0, 1.0 - r * r));
  }

  std::mt19937_64 engine(mix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  m.hyperplanes_.resize(h * (d + 1));
  for (double& v : m.hyperplanes_) v = gauss(engine);

  m.codes_.assign(n * m.words_, 0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    const auto code = m.encode(m.transform_row(X, static_cast<std::size_t>(i)));
    std::copy(code.begin(), code.end(), m.codes_.begin() + i * static_cast<long long>(m.words_));
  }
  return m;
}

std::vector<double> LshModel::transform_row(const DataMatrix& X, std::size_t i) const {
  std::vector<double> out(d_ + 1);
  const auto row = X.row(i);
  for (std::size_t j = 0; j < d_; ++j) out[j] = static_cast<double>(row[j]) / m_;
  out[d_] = augmented_[i];
  return out;
}

std::vector<double> LshModel::transform_query(std::span<const double> q) {
  double s = 0.0;
  for (double v : q) s += v * v;
  const double norm = std::sqrt(s);
  std::vector<double> out(q.size() + 1, 0.0);
  if (norm > 0.0)
    for (std::size_t j = 0; j < q.size(); ++j) out[j] = q[j] / norm;
  return out;
}

std::vector<std::uint64_t> LshModel::encode(std::span<const double> v) const {
  if (v.size() != d_ + 1) throw std::invalid_argument("LSH encode: wrong vector length");
  std::vector<std::uint64_t> code(words_, 0);
  for (std::size_t b = 0; b < h_; ++b) {
    const double* plane = hyperplanes_.data() + b * (d_ + 1);
    double s = 0.0;
    for (std::size_t j = 0; j <= d_; ++j) s += plane[j] * v[j];
    if (s >= 0.0) code[b / 64] |= std::uint64_t{1} << (b % 64);
  }
  return code;
}

std::size_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept {
  std::size_t dist = 0;
  for (std::size_t w = 0; w < a.size(); ++w) dist += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  return dist;
}

CandidateSet lsh_candidates(const LshModel& model, std::span<const double> q, std::size_t B) {
  check_query(q, model.dims());
  if (B == 0) throw std::invalid_argument("candidate budget B must be >= 1");
  const auto code = model.encode(LshModel::transform_query(q));
  const std::size_t n = model.rows(), h = model.code_bits();

  // Distances lie in [0, h]: a counting sort gives the (distance, row) order
  // in O(n + h).
  std::vector<std::uint32_t> dist(n);
  std::vector<std::size_t> bucket(h + 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = static_cast<std::uint32_t>(hamming(code, model.data_code(i)));
    ++bucket[dist[i] + 1];
  }
  for (std::size_t b = 1; b < bucket.size(); ++b) bucket[b] += bucket[b - 1];
  std::vector<RowId> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[bucket[dist[i]]++] = static_cast<RowId>(i);

  CandidateSet out;
  out.origin = "simplelsh";
  sorted.resize(std::min(B, n));
  out.rows = std::move(sorted);
  return out;
}

}  // namespace bmips
