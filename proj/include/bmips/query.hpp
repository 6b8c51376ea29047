#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmips/alias_table.hpp"
#include "bmips/index.hpp"

namespace bmips {

/// Per-query statistics shared by all samplers.
struct QueryContext {
  std::vector<double> q;
  std::vector<double> abs_q;
  double q_norm1 = 0.0;
  /// z = sum_j c_j |q_j|, the total sampling mass.
  double z = 0.0;
  /// w_j = c_j |q_j| / z.
  std::vector<double> col_weight;
  /// s_j = S w_j, kept real.
  std::vector<double> sample_budgets;
  std::uint64_t samples = 0;
  /// Draws column j with probability w_j (wedge column choice).
  AliasTable column_alias;
  /// Draws column j with probability |q_j| / ||q||_1 (basic sampling).
  AliasTable query_alias;

  /// z == 0: the query puts no mass on any sampleable column.
  bool degenerate() const noexcept { return !(z > 0.0); }
};

/// Largest accepted S; sample counts stay exact in double arithmetic.
inline constexpr std::uint64_t kMaxSamples = std::uint64_t{1} << 52;

/// O(d) per-query preparation. dWedge reads neither alias table, so it may
/// pass alias_tables = false to skip building them. Throws
/// std::invalid_argument on a dimension mismatch, a non-finite query entry or
/// S > kMaxSamples.
QueryContext make_query_context(const MipsIndex& index, std::span<const double> q,
                                std::uint64_t samples, bool alias_tables = true);

}  // namespace bmips
