#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bmips/samplers.hpp"
#include "test_util.hpp"

namespace bmips {
namespace {

using testing::exact_products;
using testing::random_matrix;
using testing::random_query;

// Test-only dWedge written straight from the matrix: own sort, own budgets.
// Returns per-row counters and per-column (tally before last credit, final
// tally) pairs.
struct NaiveDWedge {
  std::map<RowId, double> counters;
  std::vector<std::pair<double, double>> tallies;
};

NaiveDWedge naive_dwedge(const DataMatrix& X, const std::vector<double>& q, double S) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<double> c(d, 0.0);
  double z = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) c[j] += std::fabs(double(X.at(i, j)));
    z += c[j] * std::fabs(q[j]);
  }
  NaiveDWedge out;
  out.tallies.assign(d, {0.0, 0.0});
  for (std::size_t j = 0; j < d; ++j) {
    const double s = S * (c[j] * std::fabs(q[j])) / z;
    if (!(s > 0.0)) continue;
    std::vector<RowId> order(n);
    std::iota(order.begin(), order.end(), RowId{0});
    std::ranges::sort(order, [&](RowId a, RowId b) {
      const double va = std::fabs(double(X.at(a, j))), vb = std::fabs(double(X.at(b, j)));
      return va != vb ? va > vb : a < b;
    });
    double tally = 0.0;
    for (RowId i : order) {
      const double x = X.at(i, j);
      const double w = std::ceil(s * std::fabs(x) / c[j]);
      if (w == 0.0) break;
      out.tallies[j].first = tally;
      out.counters[i] += (x < 0 ? -1.0 : 1.0) * (q[j] < 0 ? -1.0 : 1.0) * w;
      tally += w;
      out.tallies[j].second = tally;
      if (tally >= s) break;
    }
  }
  return out;
}

std::map<RowId, double> as_map(const Histogram& h) {
  std::map<RowId, double> m;
  for (const auto& [r, v] : h.entries()) m[r] = v;
  return m;
}

// ---- query context -----------------------------------------------------

TEST(QueryContext, TwoByTwoExample) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{1, 1};
  const QueryContext ctx = make_query_context(idx, q, 10);
  EXPECT_DOUBLE_EQ(ctx.z, 10.0);
  EXPECT_DOUBLE_EQ(ctx.col_weight[0], 0.4);
  EXPECT_DOUBLE_EQ(ctx.col_weight[1], 0.6);
  EXPECT_DOUBLE_EQ(ctx.sample_budgets[0], 4.0);
  EXPECT_DOUBLE_EQ(ctx.sample_budgets[1], 6.0);
  EXPECT_DOUBLE_EQ(ctx.q_norm1, 2.0);
  EXPECT_FALSE(ctx.degenerate());
}

TEST(QueryContext, ZeroQueryIsDegenerate) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{0, 0};
  const QueryContext ctx = make_query_context(idx, q, 10);
  EXPECT_TRUE(ctx.degenerate());
  EXPECT_EQ(ctx.z, 0.0);
}

TEST(QueryContext, SignedUsesAbsoluteValues) {
  const DataMatrix X{{1, -2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{1, -1};
  EXPECT_DOUBLE_EQ(make_query_context(idx, q, 10).z, 10.0);
}

TEST(QueryContext, Errors) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  EXPECT_THROW(make_query_context(idx, std::vector<double>{1, 2, 3}, 1), std::invalid_argument);
  EXPECT_THROW(make_query_context(idx, std::vector<double>{1, NAN}, 1), std::invalid_argument);
  EXPECT_NO_THROW(make_query_context(idx, std::vector<double>{1, 2}, kMaxSamples));
  EXPECT_THROW(make_query_context(idx, std::vector<double>{1, 2}, kMaxSamples + 1),
               std::invalid_argument);
}

TEST(QueryContext, WithoutAliasTables) {
  const DataMatrix X = random_matrix(40, 5, 2);
  const MipsIndex idx = build_index(X);
  const auto q = random_query(5, 3);
  const auto full = make_query_context(idx, q, 300);
  const auto bare = make_query_context(idx, q, 300, false);
  EXPECT_EQ(bare.sample_budgets, full.sample_budgets);
  EXPECT_EQ(dwedge_sample(idx, bare).entries(), dwedge_sample(idx, full).entries());
  SamplerRng rng(1);
  EXPECT_THROW(wedge_sample(idx, bare, 10, rng), std::invalid_argument);
  EXPECT_THROW(diamond_sample(idx, bare, 10, rng), std::invalid_argument);
  EXPECT_THROW(ddiamond_sample(idx, bare, rng), std::invalid_argument);
}

TEST(QueryContext, WeightsAndBudgetsSum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DataMatrix X = random_matrix(40, 9, seed);
    const MipsIndex idx = build_index(X);
    const auto q = random_query(9, seed + 100);
    const QueryContext ctx = make_query_context(idx, q, 12345);
    EXPECT_NEAR(std::accumulate(ctx.col_weight.begin(), ctx.col_weight.end(), 0.0), 1.0, 1e-12);
    EXPECT_NEAR(std::accumulate(ctx.sample_budgets.begin(), ctx.sample_budgets.end(), 0.0),
                12345.0, 1e-8);
  }
}

// ---- basic sampling ----------------------------------------------------

TEST(BasicEstimate, OneHotIsExact) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{0, 2.5};
  const QueryContext ctx = make_query_context(idx, q, 0);
  SamplerRng rng(1);
  EXPECT_DOUBLE_EQ(basic_estimate(X, ctx, 0, 100, rng), 5.0);
  EXPECT_DOUBLE_EQ(basic_estimate(X, ctx, 1, 100, rng), 10.0);
}

TEST(BasicEstimate, MonteCarloMean) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{1, 1};
  const QueryContext ctx = make_query_context(idx, q, 0);
  SamplerRng rng(2);
  // Per-draw values are {2,4} and {6,8}: standard deviation 1, so the
  // standard error over 1e6 draws is 1e-3.
  EXPECT_NEAR(basic_estimate(X, ctx, 0, 1'000'000, rng), 3.0, 5e-3);
  EXPECT_NEAR(basic_estimate(X, ctx, 1, 1'000'000, rng), 7.0, 5e-3);
}

TEST(BasicEstimate, Errors) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(3);
  const auto zero = make_query_context(idx, std::vector<double>{0, 0}, 0);
  EXPECT_THROW(basic_estimate(X, zero, 0, 10, rng), std::invalid_argument);
  const auto ok = make_query_context(idx, std::vector<double>{1, 0}, 0);
  EXPECT_THROW(basic_estimate(X, ok, 0, 0, rng), std::invalid_argument);
}

// ---- wedge -------------------------------------------------------------

TEST(Wedge, ZeroSamplesEmpty) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const auto ctx = make_query_context(idx, std::vector<double>{1, 1}, 0);
  SamplerRng rng(1);
  EXPECT_TRUE(wedge_sample(idx, ctx, 0, rng).empty());
}

TEST(Wedge, DegenerateQueryFlagged) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const auto ctx = make_query_context(idx, std::vector<double>{0, 0}, 100);
  SamplerRng rng(1);
  const Histogram h = wedge_sample(idx, ctx, 100, rng);
  EXPECT_TRUE(h.empty());
  EXPECT_TRUE(h.degenerate());
}

TEST(Wedge, TwoByTwoMarginal) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(11);
  const std::uint64_t S = 1'000'000;
  const Histogram h = wedge_sample(idx, make_query_context(idx, std::vector<double>{1, 1}, S), S, rng);
  EXPECT_NEAR(h.at(0) / S, 0.3, 0.005);
  EXPECT_NEAR(h.at(1) / S, 0.7, 0.005);
  EXPECT_DOUBLE_EQ(h.at(0) + h.at(1), double(S));
}

TEST(Wedge, OneHotConditional) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(12);
  const std::uint64_t S = 1'000'000;
  const Histogram h = wedge_sample(idx, make_query_context(idx, std::vector<double>{1, 0}, S), S, rng);
  EXPECT_NEAR(h.at(0) / S, 0.25, 0.005);
  EXPECT_NEAR(h.at(1) / S, 0.75, 0.005);
}

TEST(Wedge, MarginalMatchesEnumeratedProducts) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 2 + seed * 6, d = 1 + seed % 5;
    const DataMatrix X = random_matrix(n, d, seed, true);
    const auto q = random_query(d, seed + 7, true);
    const MipsIndex idx = build_index(X);
    const std::uint64_t S = 200'000;
    SamplerRng rng(seed);
    const Histogram h = wedge_sample(idx, make_query_context(idx, q, S), S, rng);
    const auto z_i = exact_products(X, q);
    const double z = std::accumulate(z_i.begin(), z_i.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = z_i[i] / z;
      EXPECT_NEAR(h.at(RowId(i)) / S, p, 4 * std::sqrt(p * (1 - p) / S) + 1e-12)
          << "seed " << seed << " row " << i;
      total += h.at(RowId(i));
    }
    EXPECT_DOUBLE_EQ(total, double(S));
  }
}

TEST(Wedge, SignTrickIsProportionalToProducts) {
  const DataMatrix X = random_matrix(12, 4, 3);
  const auto q = random_query(4, 4);
  const MipsIndex idx = build_index(X);
  const std::uint64_t S = 2'000'000;
  const auto ctx = make_query_context(idx, q, S);
  SamplerRng rng(5);
  const Histogram h = wedge_sample(idx, ctx, S, rng);
  const auto prod = exact_products(X, q);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    // Each draw contributes +-1 with mean x_i.q / z.
    EXPECT_NEAR(h.at(RowId(i)) / S, prod[i] / ctx.z, 4 / std::sqrt(double(S)));
    abs_sum += std::fabs(h.at(RowId(i)));
  }
  EXPECT_LE(abs_sum, double(S));
}

// ---- diamond -----------------------------------------------------------

TEST(Diamond, ZeroSamplesEmpty) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(1);
  EXPECT_TRUE(diamond_sample(idx, make_query_context(idx, std::vector<double>{1, 1}, 0), 0, rng).empty());
}

TEST(Diamond, SecondMomentTwoByTwo) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const std::uint64_t S = 1'000'000;
  const auto ctx = make_query_context(idx, std::vector<double>{1, 1}, S);
  SamplerRng rng(21);
  const Histogram h = diamond_sample(idx, ctx, S, rng);
  const double scale = ctx.z * ctx.q_norm1 / double(S);
  EXPECT_NEAR(h.at(1) * scale, 49.0, 0.05 * 49.0);
  EXPECT_NEAR(h.at(0) * scale, 9.0, 0.05 * 9.0);
}

TEST(Diamond, DegenerateFlagged) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(1);
  const auto h = diamond_sample(idx, make_query_context(idx, std::vector<double>{0, 0}, 5), 5, rng);
  EXPECT_TRUE(h.degenerate());
  EXPECT_TRUE(h.empty());
}

// ---- dWedge ------------------------------------------------------------

TEST(DWedge, HandTraceNonNegative) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const Histogram h = dwedge_sample(idx, make_query_context(idx, std::vector<double>{1, 1}, 10));
  EXPECT_EQ(h.at(0), 3.0);
  EXPECT_EQ(h.at(1), 7.0);
}

TEST(DWedge, HandTraceSigned) {
  const DataMatrix X{{1, -2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const Histogram h = dwedge_sample(idx, make_query_context(idx, std::vector<double>{1, -1}, 10));
  EXPECT_EQ(h.at(0), 3.0);
  EXPECT_EQ(h.at(1), -1.0);
}

TEST(DWedge, ExhaustionVisitsEveryRow) {
  const DataMatrix X = random_matrix(30, 4, 8);
  const MipsIndex idx = build_index(X);
  const auto q = random_query(4, 9);
  // s_j >= c_j n / min|x_ij| in every column.
  auto ctx = make_query_context(idx, q, 1);
  double S = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double mn = INFINITY;
    for (std::size_t i = 0; i < 30; ++i) mn = std::min(mn, std::fabs(double(X.at(i, j))));
    S = std::max(S, idx.col_norm(j) * 30 / mn / ctx.col_weight[j]);
  }
  ctx = make_query_context(idx, q, std::uint64_t(std::ceil(S)));
  const Histogram h = dwedge_sample(idx, ctx);
  EXPECT_EQ(h.touched_count(), 30u);
}

TEST(DWedge, MatchesNaiveReferenceAndColumnAccounting) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::mt19937_64 g(seed);
    const std::size_t n = 5 + g() % 300, d = 1 + g() % 12;
    const DataMatrix X = random_matrix(n, d, seed);
    const auto q = random_query(d, seed ^ 0xff);
    const MipsIndex idx = build_index(X);
    const std::uint64_t S = 1 + g() % (4 * n);
    const auto ctx = make_query_context(idx, q, S);
    const Histogram h = dwedge_sample(idx, ctx);
    const NaiveDWedge ref = naive_dwedge(X, q, double(S));
    EXPECT_EQ(as_map(h), ref.counters) << "seed " << seed;
    for (std::size_t j = 0; j < d; ++j) {
      const auto [before_last, final_tally] = ref.tallies[j];
      EXPECT_LT(before_last, ctx.sample_budgets[j] + 1e-9);
      // Either the budget was reached or the column ran out.
      if (final_tally < ctx.sample_budgets[j]) EXPECT_GT(final_tally, 0.0);
    }
    // Counters are integers.
    h.for_each([](RowId, double v) { EXPECT_EQ(v, std::round(v)); });
  }
}

TEST(DWedge, Deterministic) {
  const DataMatrix X = random_matrix(500, 20, 77);
  const MipsIndex idx = build_index(X);
  const auto q = random_query(20, 78);
  const auto ctx = make_query_context(idx, q, 700);
  EXPECT_EQ(dwedge_sample(idx, ctx).entries(), dwedge_sample(idx, ctx).entries());
}

TEST(DWedge, DegenerateFlagged) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const auto h = dwedge_sample(idx, make_query_context(idx, std::vector<double>{0, 0}, 10));
  EXPECT_TRUE(h.degenerate());
  EXPECT_TRUE(h.empty());
}

// ---- dDiamond ----------------------------------------------------------

TEST(DDiamond, ZeroBudgetEmpty) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  SamplerRng rng(1);
  EXPECT_TRUE(ddiamond_sample(idx, make_query_context(idx, std::vector<double>{1, 1}, 0), rng).empty());
}

TEST(DDiamond, ExpectedCountersTwoByTwo) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  const auto ctx = make_query_context(idx, std::vector<double>{1, 1}, 10);
  const int runs = 20000;
  double sum[2] = {0, 0}, sq[2] = {0, 0};
  for (int r = 0; r < runs; ++r) {
    SamplerRng rng = SamplerRng::for_query(5, r);
    const Histogram h = ddiamond_sample(idx, ctx, rng);
    for (RowId i = 0; i < 2; ++i) {
      sum[i] += h.at(i);
      sq[i] += h.at(i) * h.at(i);
    }
  }
  // Row 2 gets 7 draws of mean 3.5, row 1 gets 3 draws of mean 1.5.
  const double expected[2] = {4.5, 24.5};
  for (int i = 0; i < 2; ++i) {
    const double mean = sum[i] / runs;
    const double se = std::sqrt((sq[i] / runs - mean * mean) / runs);
    EXPECT_NEAR(mean, expected[i], 3 * se);
  }
}

TEST(DDiamond, OneHotScalesDWedge) {
  const DataMatrix X = random_matrix(50, 3, 31);
  const MipsIndex idx = build_index(X);
  const std::vector<double> q{0, 1.5, 0};
  const auto ctx = make_query_context(idx, q, 60);
  SamplerRng rng(9);
  const auto dd = ddiamond_sample(idx, ctx, rng);
  const auto dw = dwedge_sample(idx, ctx);
  ASSERT_EQ(dd.touched_count(), dw.touched_count());
  dw.for_each([&](RowId i, double v) {
    EXPECT_DOUBLE_EQ(dd.at(i), v * double(X.at(i, 1)));
  });
}

// ---- histogram ---------------------------------------------------------

TEST(Histogram, SparseAndDenseEquivalent) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 g(seed);
    const std::size_t n = 1 + g() % 1000;
    Histogram sparse(n, Histogram::Representation::Sparse);
    Histogram dense(n, Histogram::Representation::Dense);
    const std::size_t adds = g() % 3000;
    for (std::size_t a = 0; a < adds; ++a) {
      const auto r = RowId(g() % n);
      const double v = double(int(g() % 7) - 3);
      sparse.add(r, v);
      dense.add(r, v);
    }
    EXPECT_EQ(sparse.entries(), dense.entries());
    EXPECT_EQ(sparse.touched_count(), dense.touched_count());
    for (RowId r = 0; r < n; ++r) {
      EXPECT_EQ(sparse.at(r), dense.at(r));
      EXPECT_EQ(sparse.touched(r), dense.touched(r));
    }
  }
}

TEST(Histogram, RepresentationFollowsBudget) {
  EXPECT_EQ(Histogram::for_budget(100, 49).representation(), Histogram::Representation::Sparse);
  EXPECT_EQ(Histogram::for_budget(100, 50).representation(), Histogram::Representation::Dense);
}

TEST(Histogram, ZeroNetCounterStillTouched) {
  Histogram h(4, Histogram::Representation::Dense);
  h.add(2, 1.0);
  h.add(2, -1.0);
  EXPECT_TRUE(h.touched(2));
  EXPECT_EQ(h.at(2), 0.0);
}

}  // namespace
}  // namespace bmips
