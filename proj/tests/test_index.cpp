#include <gtest/gtest.h>

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bmips/index.hpp"
#include "test_util.hpp"

namespace bmips {
namespace {

TEST(AliasTable, EnumeratedDistributionMatchesWeights) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 g(seed);
    const std::size_t n = 1 + g() % 64;
    std::vector<double> w(n);
    for (auto& x : w) x = (g() % 5 == 0) ? 0.0 : std::uniform_real_distribution<double>(0, 3)(g);
    if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 1.0;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const auto p = AliasTable(w).implied_distribution();
    ASSERT_EQ(p.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], w[i] / total, 1e-12) << "seed " << seed;
  }
}

TEST(AliasTable, ZeroWeightsGiveEmptyTable) {
  const std::vector<double> w{0.0, 0.0, 0.0};
  EXPECT_TRUE(AliasTable(w).empty());
}

TEST(AliasTable, RejectsNegativeWeight) {
  const std::vector<double> w{1.0, -0.5};
  EXPECT_THROW(AliasTable{w}, std::invalid_argument);
}

TEST(AliasTable, SampleFrequencies) {
  const std::vector<double> w{1.0, 0.0, 3.0};
  const AliasTable t(w);
  SamplerRng rng(7);
  std::vector<int> counts(3, 0);
  const int draws = 200000;
  for (int s = 0; s < draws; ++s) ++counts[t.sample(rng)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / double(draws), 0.25, 4 * std::sqrt(0.25 * 0.75 / draws));
}

TEST(BuildIndex, TwoByTwo) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  EXPECT_DOUBLE_EQ(idx.col_norm(0), 4.0);
  EXPECT_DOUBLE_EQ(idx.col_norm(1), 6.0);
  EXPECT_EQ(std::vector<RowId>(idx.abs_order(0).begin(), idx.abs_order(0).end()),
            (std::vector<RowId>{1, 0}));
  EXPECT_EQ(std::vector<RowId>(idx.abs_order(1).begin(), idx.abs_order(1).end()),
            (std::vector<RowId>{1, 0}));
  EXPECT_DOUBLE_EQ(idx.max_entry(), 4.0);
}

TEST(BuildIndex, AllZeroColumnsAreUnsampleable) {
  const DataMatrix X{{0, 0}, {0, 0}};
  const MipsIndex idx = build_index(X);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(idx.col_norm(j), 0.0);
    EXPECT_FALSE(idx.sampleable(j));
    EXPECT_TRUE(idx.col_alias(j).empty());
  }
}

TEST(BuildIndex, SignedAndAbsoluteOrders) {
  const DataMatrix X{{1, -2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  EXPECT_DOUBLE_EQ(idx.col_norm(0), 4.0);
  EXPECT_DOUBLE_EQ(idx.col_norm(1), 6.0);
  EXPECT_EQ(idx.signed_order(1)[0], 1u);
  EXPECT_EQ(idx.signed_order(1)[1], 0u);
  EXPECT_EQ(idx.abs_order(1)[0], 1u);
  EXPECT_EQ(idx.abs_order(1)[1], 0u);
}

TEST(BuildIndex, TiesGoToSmallerRow) {
  const DataMatrix X{{2, -1}, {-2, 1}, {2, 1}};
  const MipsIndex idx = build_index(X);
  EXPECT_EQ(std::vector<RowId>(idx.abs_order(0).begin(), idx.abs_order(0).end()),
            (std::vector<RowId>{0, 1, 2}));
  EXPECT_EQ(std::vector<RowId>(idx.signed_order(0).begin(), idx.signed_order(0).end()),
            (std::vector<RowId>{0, 2, 1}));
  EXPECT_EQ(std::vector<RowId>(idx.signed_order(1).begin(), idx.signed_order(1).end()),
            (std::vector<RowId>{1, 2, 0}));
}

TEST(BuildIndex, InvariantsOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 1 + seed * 3, d = 1 + seed % 7;
    const DataMatrix X = testing::random_matrix(n, d, seed);
    const MipsIndex idx = build_index(X);
    for (std::size_t j = 0; j < d; ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += std::fabs(double(X.at(i, j)));
      EXPECT_NEAR(idx.col_norm(j), c, 1e-9 * c);

      const auto a = idx.abs_order(j);
      const auto s = idx.signed_order(j);
      std::vector<RowId> sa(a.begin(), a.end()), ss(s.begin(), s.end());
      std::ranges::sort(sa);
      std::ranges::sort(ss);
      std::vector<RowId> ident(n);
      std::iota(ident.begin(), ident.end(), RowId{0});
      EXPECT_EQ(sa, ident);
      EXPECT_EQ(ss, ident);
      for (std::size_t r = 1; r < n; ++r) {
        EXPECT_GE(std::fabs(X.at(a[r - 1], j)), std::fabs(X.at(a[r], j)));
        EXPECT_GE(X.at(s[r - 1], j), X.at(s[r], j));
        EXPECT_EQ(idx.abs_sorted_values(j)[r], X.at(a[r], j));
      }

      const auto p = idx.col_alias(j).implied_distribution();
      for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(p[i], std::fabs(double(X.at(i, j))) / c, 1e-12);
    }
  }
}

TEST(BuildIndex, ParallelMatchesSerialAndIsDeterministic) {
  const DataMatrix X = testing::random_matrix(300, 16, 99);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const MipsIndex par = build_index(X);
  omp_set_num_threads(saved);
  const MipsIndex ser = build_index_serial(X);
  EXPECT_TRUE(same_structure(par, ser));
  EXPECT_EQ(serialize_index(par), serialize_index(build_index(X)));
}

class IndexFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("bmips_index_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  IndexFormatError::Kind load_error(const std::vector<std::byte>& bytes, const DataMatrix& X) {
    try {
      load_index(std::span<const std::byte>(bytes), X);
    } catch (const IndexFormatError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "load succeeded";
    return IndexFormatError::Kind::Io;
  }

  std::filesystem::path dir_;
};

TEST_F(IndexFile, RoundTrip) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const MipsIndex idx = build_index(X);
  save_index(idx, dir_ / "a.widx");
  const MipsIndex back = load_index(dir_ / "a.widx", X);
  EXPECT_TRUE(same_structure(idx, back));
  EXPECT_EQ(serialize_index(idx), serialize_index(back));
}

TEST_F(IndexFile, RoundTripWithZeroColumn) {
  const DataMatrix X{{0, 2, -1}, {0, 4, 5}, {0, -1, 0}};
  const MipsIndex idx = build_index(X);
  const MipsIndex back = load_index(std::span<const std::byte>(serialize_index(idx)), X);
  EXPECT_TRUE(same_structure(idx, back));
  EXPECT_FALSE(back.sampleable(0));
}

TEST_F(IndexFile, HeaderLayout) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const auto bytes = serialize_index(build_index(X));
  ASSERT_EQ(bytes.size(), 4 + 4 + 16 + 2 * 8 + 2 * 4 * 4 + 4 * 12 + 4u);
  EXPECT_EQ(std::memcmp(bytes.data(), "WIDX", 4), 0);
  std::uint32_t version;
  std::uint64_t n, d;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&n, bytes.data() + 8, 8);
  std::memcpy(&d, bytes.data() + 16, 8);
  EXPECT_EQ(version, kIndexFormatVersion);
  EXPECT_EQ(n, 2u);
  EXPECT_EQ(d, 2u);
}

TEST_F(IndexFile, DistinctErrors) {
  const DataMatrix X{{1, 2}, {3, 4}};
  const auto good = serialize_index(build_index(X));

  auto truncated = good;
  truncated.resize(good.size() - 10);
  EXPECT_EQ(load_error(truncated, X), IndexFormatError::Kind::Truncated);

  auto short_header = good;
  short_header.resize(10);
  EXPECT_EQ(load_error(short_header, X), IndexFormatError::Kind::Truncated);

  auto wrong_version = good;
  wrong_version[4] = std::byte{2};
  EXPECT_EQ(load_error(wrong_version, X), IndexFormatError::Kind::VersionMismatch);

  auto corrupt = good;
  corrupt[40] ^= std::byte{0x01};
  EXPECT_EQ(load_error(corrupt, X), IndexFormatError::Kind::ChecksumMismatch);

  auto bad_magic = good;
  bad_magic[0] = std::byte{'X'};
  EXPECT_EQ(load_error(bad_magic, X), IndexFormatError::Kind::BadMagic);

  const DataMatrix other{{1, 2, 3}, {3, 4, 5}};
  EXPECT_EQ(load_error(good, other), IndexFormatError::Kind::ShapeMismatch);
}

TEST_F(IndexFile, TruncatedFileOnDisk) {
  const DataMatrix X = testing::random_matrix(20, 3, 5);
  save_index(build_index(X), dir_ / "t.widx");
  std::filesystem::resize_file(dir_ / "t.widx", 50);
  try {
    load_index(dir_ / "t.widx", X);
    FAIL() << "expected a truncation error";
  } catch (const IndexFormatError& e) {
    EXPECT_EQ(e.kind(), IndexFormatError::Kind::Truncated);
  }
}

TEST(DataMatrix, RejectsNonFiniteWithLocation) {
  std::vector<float> v{1, 2, 3, std::nanf("")};
  try {
    DataMatrix X(2, 2, v);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.row(), 1);
    EXPECT_EQ(e.col(), 1);
  }
}

TEST(DataMatrix, ColumnSlice) {
  const DataMatrix X{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(X.column(1), (std::vector<float>{2, 4, 6}));
}

}  // namespace
}  // namespace bmips
