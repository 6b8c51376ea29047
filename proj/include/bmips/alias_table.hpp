#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmips/rng.hpp"

namespace bmips {

/// Walker/Vose alias table: O(n) build, O(1) per draw from a fixed discrete
/// distribution. An all-zero weight vector yields an empty table.
class AliasTable {
 public:
  AliasTable() = default;

  /// Weights must be finite and non-negative.
  explicit AliasTable(std::span<const double> weights);

  /// Rebuilds an alias table from stored cells (deserialization).
  AliasTable(std::vector<double> prob, std::vector<std::uint32_t> alias);

  bool empty() const noexcept { return prob_.empty(); }
  std::size_t size() const noexcept { return prob_.size(); }

  std::uint32_t sample(SamplerRng& rng) const noexcept {
    const std::uint32_t cell = rng.below(static_cast<std::uint32_t>(prob_.size()));
    return rng.uniform() < prob_[cell] ? cell : alias_[cell];
  }

  /// Probability mass the table assigns to each outcome, by enumerating every
  /// cell. Used to check a table against the distribution it was built from.
  std::vector<double> implied_distribution() const;

  std::span<const double> prob() const noexcept { return prob_; }
  std::span<const std::uint32_t> alias() const noexcept { return alias_; }

  bool operator==(const AliasTable&) const = default;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace bmips
