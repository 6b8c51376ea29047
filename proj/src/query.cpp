#include "bmips/query.hpp"

#include <cmath>
#include <stdexcept>

namespace bmips {

QueryContext make_query_context(const MipsIndex& index, std::span<const double> q,
                                std::uint64_t samples, bool alias_tables) {
  check_query(q, index.cols());
  if (samples > kMaxSamples) throw std::invalid_argument("sample budget exceeds 2^52");
  const std::size_t d = index.cols();

  QueryContext ctx;
  ctx.q.assign(q.begin(), q.end());
  ctx.abs_q.resize(d);
  ctx.samples = samples;
  std::vector<double> mass(d);
  for (std::size_t j = 0; j < d; ++j) {
    ctx.abs_q[j] = std::fabs(q[j]);
    ctx.q_norm1 += ctx.abs_q[j];
    mass[j] = index.col_norm(j) * ctx.abs_q[j];
    ctx.z += mass[j];
  }

  ctx.col_weight.assign(d, 0.0);
  ctx.sample_budgets.assign(d, 0.0);
  if (alias_tables && ctx.q_norm1 > 0.0) ctx.query_alias = AliasTable(ctx.abs_q);
  if (ctx.degenerate()) return ctx;

  const double S = static_cast<double>(samples);
  for (std::size_t j = 0; j < d; ++j) {
    ctx.col_weight[j] = mass[j] / ctx.z;
    // S c_j |q_j| / z directly, one rounding fewer than S * w_j.
    ctx.sample_budgets[j] = S * mass[j] / ctx.z;
  }
  if (alias_tables) ctx.column_alias = AliasTable(mass);
  return ctx;
}

}  // namespace bmips
