#include "bmips/histogram.hpp"

#include <algorithm>

namespace bmips {

Histogram::Histogram(std::size_t n, Representation repr) : n_(n), repr_(repr) {
  if (repr_ == Representation::Dense) dense_.assign(n, -0.0);
}

Histogram Histogram::for_budget(std::size_t n, std::uint64_t samples) {
  return Histogram(n, 2 * samples < n ? Representation::Sparse : Representation::Dense);
}

double Histogram::at(RowId row) const {
  if (repr_ == Representation::Dense) return untouched(dense_[row]) ? 0.0 : dense_[row];
  const auto it = sparse_.find(row);
  return it == sparse_.end() ? 0.0 : it->second;
}

bool Histogram::touched(RowId row) const {
  if (repr_ == Representation::Dense) return !untouched(dense_[row]);
  return sparse_.contains(row);
}

std::size_t Histogram::touched_count() const noexcept {
  if (repr_ == Representation::Sparse) return sparse_.size();
  return static_cast<std::size_t>(
      std::ranges::count_if(dense_, [](double v) { return !untouched(v); }));
}

std::vector<std::pair<RowId, double>> Histogram::entries() const {
  std::vector<std::pair<RowId, double>> out;
  for_each([&](RowId r, double v) { out.emplace_back(r, v); });
  std::ranges::sort(out, {}, &std::pair<RowId, double>::first);
  return out;
}

}  // namespace bmips
