#pragma once

#include <cstdint>

#include "bmips/histogram.hpp"
#include "bmips/index.hpp"
#include "bmips/query.hpp"
#include "bmips/rng.hpp"

namespace bmips {

// Screening samplers. All of them run on |X| and |q| and credit counters with
// the product of the signs involved, so they accept general real inputs.

/// Unbiased estimate of x_row . q from `draws` basic samples: ||q||_1 times
/// the mean of sgn(q_j) x_{row,j} with j ~ |q_j| / ||q||_1.
double basic_estimate(const DataMatrix& X, const QueryContext& ctx, RowId row,
                      std::uint64_t draws, SamplerRng& rng);

/// S independent wedge draws. Each picks column j with probability w_j, then
/// row i with probability |x_ij| / c_j, and adds sgn(x_ij) sgn(q_j) to row i.
Histogram wedge_sample(const MipsIndex& index, const QueryContext& ctx, std::uint64_t samples,
                       SamplerRng& rng);

/// Wedge draw (i, j) followed by a basic draw j'; adds
/// sgn(q_j) sgn(x_ij) sgn(q_j') x_ij' to row i. counter_i * z * ||q||_1 / S
/// estimates (x_i . q)^2 on non-negative inputs.
Histogram diamond_sample(const MipsIndex& index, const QueryContext& ctx, std::uint64_t samples,
                         SamplerRng& rng);

/// Deterministic wedge. Walks each column by descending |x_ij| and credits
/// ceil(s_j |x_ij| / c_j) until the column's tally reaches s_j.
Histogram dwedge_sample(const MipsIndex& index, const QueryContext& ctx);

/// dWedge traversal, but each credit of weight w becomes w basic draws of
/// sgn(q_j) sgn(x_ij) sgn(q_j') x_ij'.
Histogram ddiamond_sample(const MipsIndex& index, const QueryContext& ctx, SamplerRng& rng);

}  // namespace bmips
