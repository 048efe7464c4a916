#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <cac/banks.hpp>
#include <cac/error.hpp>
#include <cac/matrix.hpp>
#include <cac/network.hpp>

#include "oracles.hpp"

namespace {

using cac::Banks;
using cac::IndexMatrix;
using cac::Matrix;

// Banks whose features are the given unit rows and whose neighbors are
// irrelevant (filled by the library from those features).
Banks banks_from_features(const Matrix& features, std::size_t k) {
  const std::size_t n = features.rows();
  IndexMatrix placeholder(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) placeholder(i, j) = (i + 1 + j) % n;
  Banks b = Banks::from_parts(features, Matrix(n, 2, 0.5), placeholder);
  std::vector<std::size_t> self(n);
  for (std::size_t i = 0; i < n; ++i) self[i] = i;
  return Banks::from_parts(features, Matrix(n, 2, 0.5), cac::topk_neighbors(b, features, k, self));
}

// Hand-built banks with a given neighbor table and uniform contents.
Banks banks_with_table(const std::vector<std::vector<std::size_t>>& table) {
  const std::size_t n = table.size();
  const std::size_t k = table[0].size();
  IndexMatrix nb(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) nb(i, j) = table[i][j];
  Matrix f(n, 1, 1.0);
  return Banks::from_parts(f, Matrix(n, 2, 0.5), nb);
}

Matrix unit_angles(const std::vector<double>& degrees) {
  Matrix m(degrees.size(), 2);
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    const double r = degrees[i] * 3.14159265358979323846 / 180.0;
    m(i, 0) = std::cos(r);
    m(i, 1) = std::sin(r);
  }
  return m;
}

TEST(Topk, ForcedOrdering) {
  // Point 1 sits closer to point 0 than point 2 does.
  const Banks b = banks_from_features(unit_angles({0, 10, 90}), 1);
  EXPECT_EQ(b.neighbors(0)[0], 1u);
  EXPECT_EQ(b.neighbors(2)[0], 1u);
}

TEST(Topk, TiesGoToSmallerIndex) {
  // 1 and 2 are mirror images around point 0.
  const Banks b = banks_from_features(unit_angles({0, 40, -40, 180}), 2);
  EXPECT_EQ(std::vector<std::size_t>(b.neighbors(0).begin(), b.neighbors(0).end()),
            (std::vector<std::size_t>{1, 2}));
}

TEST(Topk, HandRankedFourPoints) {
  // Angles 0, 30, 100, 210 degrees; rankings by angular distance.
  const Banks b = banks_from_features(unit_angles({0, 30, 100, 210}), 3);
  const std::vector<std::vector<std::size_t>> expected{
      {1, 2, 3}, {0, 2, 3}, {1, 0, 3}, {2, 0, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(std::vector<std::size_t>(b.neighbors(i).begin(), b.neighbors(i).end()),
              expected[i])
        << "row " << i;
  }
}

TEST(Topk, MatchesExhaustiveSortOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    std::mt19937_64 gen(seed);
    const std::size_t n = 2 + gen() % 63;
    const std::size_t d = 1 + gen() % 6;
    const std::size_t m = 2 + gen() % (n - 1);
    const std::size_t k = 1 + gen() % std::min<std::size_t>(m - 1, 6);
    const Banks b = oracle::random_banks(gen, n, d, 3, k, m);
    const Matrix queries = oracle::random_unit_rows(gen, n, d);
    std::vector<std::size_t> exclude(n);
    for (std::size_t i = 0; i < n; ++i) exclude[i] = i;
    const IndexMatrix got = cac::topk_neighbors(b, queries, k, exclude);
    for (std::size_t q = 0; q < n; ++q) {
      const auto want = oracle::exhaustive_topk(b.features(), b.stored_indices(), queries, q, k, q);
      ASSERT_EQ(std::vector<std::size_t>(got.row(q).begin(), got.row(q).end()), want)
          << "seed " << seed << " query " << q;
    }
  }
}

TEST(Topk, KBeyondCandidatesThrows) {
  const Banks b = banks_from_features(unit_angles({0, 30, 60}), 1);
  const std::vector<std::size_t> exclude{0};
  EXPECT_THROW(cac::topk_neighbors(b, unit_angles({5}), 3, exclude), cac::DimensionError);
}

class InitBanks : public ::testing::Test {
 protected:
  cac::ModelParams model = cac::init_model({2, 8, 4, 3}, 4);
  Matrix x = [] {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> normal(0.0, 2.0);
    Matrix m(40, 2);
    for (auto& v : m.data()) v = normal(gen);
    return m;
  }();
};

TEST_F(InitBanks, ShapesAndInvariants) {
  const Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  EXPECT_EQ(b.features().rows(), 40u);
  EXPECT_EQ(b.features().cols(), 4u);
  EXPECT_EQ(b.probs().cols(), 3u);
  EXPECT_EQ(b.neighbor_bank().rows(), 40u);
  EXPECT_EQ(b.k(), 3u);
  EXPECT_NO_THROW(b.validate());
}

TEST_F(InitBanks, PredictionsMatchForwardPass) {
  const Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  EXPECT_EQ(b.probs(), cac::model_forward(model, x).probs);
}

TEST_F(InitBanks, KPlusOneRowsForceAllOthers) {
  const Matrix small = cac::gather_rows(x, std::vector<std::size_t>{0, 1, 2, 3});
  const Banks b = cac::init_banks(model, small, 3, 1.0, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    std::set<std::size_t> got(b.neighbors(i).begin(), b.neighbors(i).end());
    std::set<std::size_t> want{0, 1, 2, 3};
    want.erase(i);
    EXPECT_EQ(got, want);
  }
}

TEST_F(InitBanks, KAtStoredCountThrows) {
  EXPECT_THROW(cac::init_banks(model, x, 40, 1.0, 0), cac::DimensionError);
  EXPECT_THROW(cac::init_banks(model, x, 12, 0.3, 0), cac::DimensionError);
  EXPECT_THROW(cac::init_banks(model, x, 3, 0.0, 0), cac::DimensionError);
}

TEST_F(InitBanks, FractionStoresSeededSubset) {
  const Banks b = cac::init_banks(model, x, 3, 0.3, 17);
  EXPECT_EQ(b.stored_count(), 12u);
  EXPECT_EQ(b.neighbor_bank().rows(), 40u);
  EXPECT_EQ(b, cac::init_banks(model, x, 3, 0.3, 17));
  EXPECT_NE(b.stored_indices(), cac::init_banks(model, x, 3, 0.3, 18).stored_indices());
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j : b.neighbors(i)) EXPECT_TRUE(b.is_stored(j));
  }
}

TEST_F(InitBanks, UpdateWithSameValuesIsNoOp) {
  Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  const Banks before = b;
  const std::vector<std::size_t> idx{5, 9, 30};
  const auto pass = cac::model_forward(model, cac::gather_rows(x, idx));
  cac::update_banks(b, idx, cac::l2_normalize_rows(pass.features), pass.probs);
  EXPECT_EQ(b, before);
}

TEST_F(InitBanks, UpdateTouchesOnlyBatchRows) {
  Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  const Banks before = b;
  const std::vector<std::size_t> idx{2, 7};
  std::mt19937_64 gen(1);
  const Matrix f = oracle::random_unit_rows(gen, 2, 4);
  const Matrix p = oracle::random_probs(gen, 2, 3);
  cac::update_banks(b, idx, f, p);
  for (std::size_t i = 0; i < 40; ++i) {
    if (i == 2 || i == 7) continue;
    ASSERT_TRUE(std::ranges::equal(b.feature(i), before.feature(i)));
    ASSERT_TRUE(std::ranges::equal(b.prediction(i), before.prediction(i)));
    ASSERT_TRUE(std::ranges::equal(b.neighbors(i), before.neighbors(i)));
  }
  EXPECT_TRUE(std::ranges::equal(b.feature(7), f.row(1)));
  EXPECT_TRUE(std::ranges::equal(b.prediction(2), p.row(0)));
}

TEST_F(InitBanks, MovedFeatureFindsNewCluster) {
  Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  // Move row 0 onto the feature of row 20; its new neighbors must be the
  // brute-force ranking around that point.
  Matrix moved(1, 4);
  std::ranges::copy(b.feature(20), moved.row(0).begin());
  const std::vector<std::size_t> idx{0};
  cac::update_banks(b, idx, moved, Matrix(1, 3, 1.0 / 3.0));
  const auto want = oracle::exhaustive_topk(b.features(), b.stored_indices(), moved, 0, 3, 0);
  EXPECT_EQ(want[0], 20u);
  EXPECT_EQ(std::vector<std::size_t>(b.neighbors(0).begin(), b.neighbors(0).end()), want);
}

TEST_F(InitBanks, UpdateRejectsOutOfRangeIndex) {
  Banks b = cac::init_banks(model, x, 3, 1.0, 0);
  const std::vector<std::size_t> idx{40};
  EXPECT_THROW(cac::update_banks(b, idx, Matrix(1, 4, 0.5), Matrix(1, 3, 1.0 / 3.0)),
               cac::DimensionError);
}

TEST_F(InitBanks, FractionModeSkipsUnstoredRows) {
  Banks b = cac::init_banks(model, x, 3, 0.3, 2);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 40 && idx.size() < 6; ++i) idx.push_back(i);
  const std::size_t unstored = static_cast<std::size_t>(
      std::ranges::count_if(idx, [&](std::size_t i) { return !b.is_stored(i); }));
  const auto pass = cac::model_forward(model, cac::gather_rows(x, idx));
  const std::size_t skipped =
      cac::update_banks(b, idx, cac::l2_normalize_rows(pass.features), pass.probs);
  EXPECT_EQ(skipped, unstored);
  EXPECT_EQ(b.skipped_updates(), unstored);
  EXPECT_NO_THROW(b.validate());
}

TEST(Banks, NeighborInvariantsSurviveRandomUpdates) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(seed);
    const std::size_t n = 5 + gen() % 40;
    const std::size_t m = 4 + gen() % (n - 3);
    const std::size_t k = 1 + gen() % std::min<std::size_t>(m - 1, 5);
    Banks b = oracle::random_banks(gen, n, 3, 4, k, m);
    for (int step = 0; step < 10; ++step) {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      std::shuffle(all.begin(), all.end(), gen);
      const std::size_t s = 1 + gen() % std::min<std::size_t>(n, 8);
      std::vector<std::size_t> idx(all.begin(), all.begin() + static_cast<long>(s));
      cac::update_banks(b, idx, oracle::random_unit_rows(gen, s, 3),
                        oracle::random_probs(gen, s, 4));
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = b.neighbors(i);
        std::set<std::size_t> distinct(row.begin(), row.end());
        ASSERT_EQ(distinct.size(), k);
        ASSERT_EQ(distinct.count(i), 0u);
        for (std::size_t j : row) ASSERT_TRUE(b.is_stored(j));
      }
    }
  }
}

TEST(ExpandedNeighbors, TwoCycle) {
  const Banks b = banks_with_table({{1}, {0}});
  EXPECT_EQ(cac::expanded_neighbors(b, 0), (std::vector<std::size_t>{0}));
}

TEST(ExpandedNeighbors, UnionByHand) {
  const Banks b = banks_with_table({{1, 2}, {3, 4}, {4, 5}, {0, 1}, {0, 1}, {0, 1}});
  EXPECT_EQ(cac::expanded_neighbors(b, 0), (std::vector<std::size_t>{3, 4, 5}));
}

TEST(ExpandedNeighbors, BoundedByKSquared) {
  std::mt19937_64 gen(12);
  const Banks b = oracle::random_banks(gen, 50, 4, 3, 4, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_LE(cac::expanded_neighbors(b, i).size(), 16u);
}

TEST(Purity, ThreeOfSixPairsIsHalf) {
  const Banks b = banks_with_table({{1}, {0}, {3}, {4}, {5}, {0}});
  const std::vector<int> labels{0, 0, 1, 1, 2, 1};
  // (0,1) (1,0) (2,3) agree; (3,4) (4,5) (5,0) do not.
  EXPECT_DOUBLE_EQ(cac::neighborhood_purity(b, labels), 0.5);
}

TEST(Purity, Extremes) {
  const Banks b = banks_with_table({{1}, {2}, {0}});
  EXPECT_DOUBLE_EQ(cac::neighborhood_purity(b, std::vector<int>{4, 4, 4}), 1.0);
  EXPECT_DOUBLE_EQ(cac::neighborhood_purity(b, std::vector<int>{0, 1, 2}), 0.0);
}

TEST(FromParts, RejectsBrokenInvariants) {
  EXPECT_THROW(banks_with_table({{0}, {0}}), cac::DimensionError);     // self
  EXPECT_THROW(banks_with_table({{1, 1}, {0, 2}, {0, 1}}), cac::DimensionError);  // repeat
  IndexMatrix nb(2, 1);
  nb(0, 0) = 1;
  nb(1, 0) = 0;
  EXPECT_THROW(Banks::from_parts(Matrix(2, 2, 1.0), Matrix(2, 2, 0.5), nb), cac::DimensionError);
  EXPECT_THROW(Banks::from_parts(Matrix(2, 1, 1.0), Matrix(2, 2, 0.7), nb), cac::DimensionError);
}

TEST(DumpBanks, WritesThreeFiles) {
  std::mt19937_64 gen(3);
  const Banks b = oracle::random_banks(gen, 10, 3, 2, 2, 10);
  const auto prefix = std::filesystem::temp_directory_path() / "cac_banks_dump";
  cac::dump_banks_csv(b, prefix);
  for (const char* suffix : {"_features.csv", "_probs.csv", "_neighbors.csv"}) {
    const std::filesystem::path path = prefix.string() + suffix;
    std::ifstream in(path);
    ASSERT_TRUE(in) << path;
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    EXPECT_EQ(lines, 11u) << path;
    std::filesystem::remove(path);
  }
}

}  // namespace
