#include "bmips/alias_table.hpp"

#include <cmath>
#include <stdexcept>

namespace bmips {

AliasTable::AliasTable(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("alias weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) return;

  const std::size_t n = weights.size();
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);

  // Vose: scaled weights split into under-full and over-full worklists. Both
  // are processed in index order so the table is a function of the weights.
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    alias_[i] = static_cast<std::uint32_t>(i);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  std::size_t si = 0, li = 0;
  while (si < small.size() && li < large.size()) {
    const std::uint32_t s = small[si++];
    const std::uint32_t l = large[li];
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      ++li;
      small.push_back(l);
    }
  }
  // Leftovers are full cells up to rounding.
  for (; li < large.size(); ++li) prob_[large[li]] = 1.0;
  for (; si < small.size(); ++si) prob_[small[si]] = 1.0;
}

AliasTable::AliasTable(std::vector<double> prob, std::vector<std::uint32_t> alias)
    : prob_(std::move(prob)), alias_(std::move(alias)) {
  if (prob_.size() != alias_.size()) throw std::invalid_argument("alias table size mismatch");
  for (std::size_t i = 0; i < prob_.size(); ++i) {
    if (!(prob_[i] >= 0.0 && prob_[i] <= 1.0) || alias_[i] >= prob_.size())
      throw std::invalid_argument("corrupt alias table cell " + std::to_string(i));
  }
}

std::vector<double> AliasTable::implied_distribution() const {
  const std::size_t n = prob_.size();
  std::vector<double> p(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    p[c] += prob_[c];
    p[alias_[c]] += 1.0 - prob_[c];
  }
  for (double& v : p) v /= static_cast<double>(n);
  return p;
}

}  // namespace bmips
