#include <gtest/gtest.h>

#include <random>

#include "random_instances.hpp"

using namespace credalboot;

namespace {

PosteriorMatrix random_posterior(int n, int c, std::mt19937_64& rng) {
  PosteriorMatrix p(n, c);
  for (int i = 0; i < n; ++i) p.row(i) = testutil::random_simplex(c, rng).transpose();
  return p;
}

bool is_subset(const FocalSetFamily& a, const FocalSetFamily& b) {
  for (FocalMask m : a.sets())
    if (b.find(m) < 0) return false;
  return true;
}

}  // namespace

TEST(ClusterSimilarity, HardAndUniformPosteriors) {
  PosteriorMatrix hard = PosteriorMatrix::Zero(6, 3);
  for (int i = 0; i < 6; ++i) hard(i, i % 3) = 1.0;
  EXPECT_EQ(cluster_similarity(hard), Matrix(2.0 * Matrix::Identity(3, 3)));
  const PosteriorMatrix flat = PosteriorMatrix::Constant(8, 4, 0.25);
  EXPECT_LE((cluster_similarity(flat) - Matrix::Constant(4, 4, 0.5)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClusterSimilarity, MatchesSumOverObjects) {
  std::mt19937_64 rng(1);
  const auto post = random_posterior(40, 5, rng);
  const auto s = cluster_similarity(post);
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) {
      double acc = 0.0;
      for (int i = 0; i < 40; ++i) acc += post(i, k) * post(i, l);
      EXPECT_NEAR(s(k, l), acc, 1e-12);
      EXPECT_EQ(s(k, l), s(l, k));
    }
}

TEST(MutualKnn, TwoClustersOneNeighbour) {
  Matrix s(2, 2);
  s << 3, 1, 1, 3;
  EXPECT_EQ(mutual_knn_pairs(s, 1), (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(MutualKnn, BlockDiagonalKeepsBlocks) {
  Matrix s = Matrix::Zero(4, 4);
  s << 5, 2, 0, 0, 2, 5, 0, 0, 0, 0, 5, 1, 0, 0, 1, 5;
  EXPECT_EQ(mutual_knn_pairs(s, 1), (std::vector<std::pair<int, int>>{{0, 1}, {2, 3}}));
  // Zero similarity never counts, even when K allows it.
  EXPECT_EQ(mutual_knn_pairs(s, 3), (std::vector<std::pair<int, int>>{{0, 1}, {2, 3}}));
}

TEST(MutualKnn, ChainOfFive) {
  // Neighbouring clusters overlap, distant ones do not.
  Matrix s = Matrix::Zero(5, 5);
  for (int k = 0; k < 5; ++k) s(k, k) = 10;
  for (int k = 0; k + 1 < 5; ++k) s(k, k + 1) = s(k + 1, k) = 2;
  for (int k = 0; k + 2 < 5; ++k) s(k, k + 2) = s(k + 2, k) = 0.5;
  const auto pairs = mutual_knn_pairs(s, 2);
  EXPECT_EQ(pairs, (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}}));
  // Ties go to the lower index, so only the end pair is mutual at K = 1.
  EXPECT_EQ(mutual_knn_pairs(s, 1), (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(MutualKnn, ValidatesK) {
  const Matrix s = Matrix::Identity(3, 3);
  EXPECT_THROW(mutual_knn_pairs(s, 3), Error);
  EXPECT_THROW(mutual_knn_pairs(s, 0), Error);
  EXPECT_THROW(mutual_knn_pairs(Matrix::Identity(1, 1), 1), Error);
}

TEST(MutualKnn, SymmetricRelation) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const int c = 3 + t % 5;
    const auto s = cluster_similarity(random_posterior(30, c, rng));
    for (int K = 1; K < c; ++K) {
      const auto pairs = mutual_knn_pairs(s, K);
      for (auto [k, l] : pairs) EXPECT_LT(k, l);
      // A cluster has at most K mutual neighbours.
      std::vector<int> degree(static_cast<std::size_t>(c), 0);
      for (auto [k, l] : pairs) {
        ++degree[static_cast<std::size_t>(k)];
        ++degree[static_cast<std::size_t>(l)];
      }
      for (int d : degree) EXPECT_LE(d, K);
    }
    EXPECT_EQ(mutual_knn_pairs(s, c - 1).size(), static_cast<std::size_t>(c * (c - 1) / 2));
  }
}

TEST(BuildFamily, Sizes) {
  EXPECT_EQ(build_family(3, {FocalMode::singletons_pairs, 2, false}).f(), 6);
  EXPECT_EQ(build_family(2, {FocalMode::singletons, 2, false}).f(), 2);
  EXPECT_EQ(build_family(2, {FocalMode::singletons, 2, true}).f(), 3);
  const std::vector<std::pair<int, int>> five{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}};
  EXPECT_EQ(FocalSetFamily::with_pairs(7, five, false).f(), 12);
  EXPECT_THROW(build_family(3, {FocalMode::mutual_knn, 1, false}), Error);
}

TEST(BuildFamily, KnnIsSubsetOfAllPairs) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const int c = 3 + t % 4;
    const auto s = cluster_similarity(random_posterior(25, c, rng));
    for (int K = 1; K < c; ++K) {
      const auto knn = build_family(c, {FocalMode::mutual_knn, K, false}, &s);
      const auto all = build_family(c, {FocalMode::singletons_pairs, K, false});
      EXPECT_TRUE(is_subset(knn, all));
      EXPECT_TRUE(is_subset(build_family(c, {FocalMode::singletons, K, false}), knn));
    }
  }
}

TEST(FocalMode, ParseNames) {
  EXPECT_EQ(parse_focal_mode("knn"), FocalMode::mutual_knn);
  EXPECT_EQ(parse_focal_mode("pairs"), FocalMode::singletons_pairs);
  EXPECT_EQ(parse_focal_mode("singletons"), FocalMode::singletons);
  EXPECT_FALSE(parse_focal_mode("all").has_value());
  for (FocalMode m : {FocalMode::singletons, FocalMode::singletons_pairs, FocalMode::mutual_knn})
    EXPECT_EQ(parse_focal_mode(to_string(m)), m);
}
