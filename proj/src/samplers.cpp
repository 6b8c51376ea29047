#include "bmips/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bmips {

namespace {

void require_alias_tables(const QueryContext& ctx) {
  if (ctx.column_alias.empty() || ctx.query_alias.empty())
    throw std::invalid_argument("query context was built without alias tables");
}

}  // namespace

double basic_estimate(const DataMatrix& X, const QueryContext& ctx, RowId row,
                      std::uint64_t draws, SamplerRng& rng) {
  if (draws == 0) throw std::invalid_argument("basic_estimate needs at least one draw");
  if (ctx.query_alias.empty()) throw std::invalid_argument("basic_estimate: zero query");
  double sum = 0.0;
  for (std::uint64_t s = 0; s < draws; ++s) {
    const std::uint32_t j = ctx.query_alias.sample(rng);
    sum += sign_of(ctx.q[j]) * static_cast<double>(X.at(row, j));
  }
  return ctx.q_norm1 * sum / static_cast<double>(draws);
}

Histogram wedge_sample(const MipsIndex& index, const QueryContext& ctx, std::uint64_t samples,
                       SamplerRng& rng) {
  Histogram h = Histogram::for_budget(index.rows(), samples);
  if (ctx.degenerate()) {
    h.mark_degenerate();
    return h;
  }
  require_alias_tables(ctx);
  const DataMatrix& X = index.source();
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::uint32_t j = ctx.column_alias.sample(rng);
    const std::uint32_t i = index.col_alias(j).sample(rng);
    // Drawn entries and their q_j are nonzero; copysign matches sign_of here.
    h.add(i, std::copysign(1.0, static_cast<double>(X.at(i, j)) * ctx.q[j]));
  }
  return h;
}

Histogram diamond_sample(const MipsIndex& index, const QueryContext& ctx, std::uint64_t samples,
                         SamplerRng& rng) {
  Histogram h = Histogram::for_budget(index.rows(), samples);
  if (ctx.degenerate()) {
    h.mark_degenerate();
    return h;
  }
  require_alias_tables(ctx);
  const DataMatrix& X = index.source();
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::uint32_t j = ctx.column_alias.sample(rng);
    const std::uint32_t i = index.col_alias(j).sample(rng);
    const std::uint32_t jp = ctx.query_alias.sample(rng);
    const double v = X.at(i, jp);
    h.add(i, sign_of(ctx.q[j]) * sign_of(X.at(i, j)) * sign_of(ctx.q[jp]) * v);
  }
  return h;
}

namespace {

// Shared column walk of dWedge and dDiamond. `credit(row, entry, weight)` is
// called for each visited entry with its ceiling weight.
//
// Magnitudes only fall along a sorted column, so after the first entry with
// scale * |x| <= 1 every weight is 1 until it reaches 0. The walk handles the
// short head of heavier entries one by one and the weight-1 tail as a counted
// loop. Weights are whole numbers, so the tally runs in integers: tally >= s_j
// exactly when tally >= ceil(s_j).
template <typename Credit>
void deterministic_walk(const MipsIndex& index, const QueryContext& ctx, Credit&& credit) {
  const std::size_t n = index.rows();
  for (std::size_t j = 0; j < index.cols(); ++j) {
    const double budget = ctx.sample_budgets[j];
    if (!(budget > 0.0) || !index.sampleable(j)) continue;
    const double scale = budget / index.col_norm(j);
    const auto order = index.abs_order(j);
    const auto values = index.abs_sorted_values(j);
    const auto col = static_cast<std::uint32_t>(j);
    const auto need = static_cast<std::int64_t>(std::ceil(budget));
    std::int64_t tally = 0;
    std::size_t r = 0;
    for (; r < n; ++r) {
      const double a = scale * std::fabs(static_cast<double>(values[r]));
      if (!(a > 1.0)) break;
      const double weight = std::ceil(a);
      credit(order[r], col, static_cast<double>(values[r]), weight);
      tally += static_cast<std::int64_t>(weight);
      if (tally >= need) break;
    }
    if (r == n || tally >= need) continue;
    const auto positive = [&](float x) { return scale * std::fabs(static_cast<double>(x)) > 0.0; };
    std::size_t stop = std::min(n, r + static_cast<std::size_t>(need - tally));
    // Weights reach 0 only past the last positive entry; search only if the
    // tail would get that far.
    if (!positive(values[stop - 1]))
      stop = static_cast<std::size_t>(
          std::partition_point(values.begin() + r, values.begin() + stop, positive) -
          values.begin());
    for (; r < stop; ++r) credit(order[r], col, static_cast<double>(values[r]), 1.0);
  }
}

}  // namespace

Histogram dwedge_sample(const MipsIndex& index, const QueryContext& ctx) {
  Histogram h = Histogram::for_budget(index.rows(), ctx.samples);
  if (ctx.degenerate()) {
    h.mark_degenerate();
    return h;
  }
  // Visited x and q_j are nonzero, so copysign agrees with sign_of and avoids
  // a branch on random signs.
  deterministic_walk(index, ctx, [&](RowId i, std::uint32_t j, double x, double weight) {
    h.add(i, std::copysign(weight, x * ctx.q[j]));
  });
  return h;
}

Histogram ddiamond_sample(const MipsIndex& index, const QueryContext& ctx, SamplerRng& rng) {
  Histogram h = Histogram::for_budget(index.rows(), ctx.samples);
  if (ctx.degenerate()) {
    h.mark_degenerate();
    return h;
  }
  require_alias_tables(ctx);
  const DataMatrix& X = index.source();
  deterministic_walk(index, ctx, [&](RowId i, std::uint32_t j, double x, double weight) {
    const double outer = sign_of(ctx.q[j]) * sign_of(x);
    const auto draws = static_cast<std::uint64_t>(weight);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < draws; ++s) {
      const std::uint32_t jp = ctx.query_alias.sample(rng);
      acc += sign_of(ctx.q[jp]) * static_cast<double>(X.at(i, jp));
    }
    h.add(i, outer * acc);
  });
  return h;
}

}  // namespace bmips
