#include <gtest/gtest.h>

#include <set>
#include <stdexcept>
#include <vector>

#include "credalboot/core.hpp"

using namespace credalboot;

TEST(PairIndex, LexicographicBijection) {
  for (std::size_t n : {2u, 3u, 7u, 30u}) {
    std::size_t expected = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        EXPECT_EQ(pair_index(i, j, n), expected);
        EXPECT_EQ(pair_index(j, i, n), expected);
        ++expected;
      }
    EXPECT_EQ(expected, pair_count(n));
  }
  EXPECT_EQ(pair_count(0), 0u);
  EXPECT_EQ(pair_count(1), 0u);
}

TEST(Seeds, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t k = 0; k < 256; ++k) seen.insert(derive_seed(s, k));
  EXPECT_EQ(seen.size(), 4u * 256u);
  EXPECT_EQ(derive_seed(5, 1, 2), derive_seed(derive_seed(5, 1), 2));
  EXPECT_NE(tag_hash("fit"), tag_hash("bootstrap"));
  static_assert(tag_hash("") == 0xcbf29ce484222325ULL);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 5u}) {
    std::vector<int> hits(101, 0);
    parallel_for(hits.size(), threads, [&](std::size_t k) { hits[k] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(ParallelFor, ReportsSmallestFailingIndex) {
  for (unsigned threads : {1u, 3u, 8u}) {
    try {
      parallel_for(64, threads, [](std::size_t k) {
        if (k == 17 || k == 40 || k == 63) throw std::runtime_error("item " + std::to_string(k));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "item 17");
    }
  }
}

TEST(Error, CarriesKind) {
  const Error e(ErrorKind::solver_stalled, "row 3");
  EXPECT_EQ(e.kind(), ErrorKind::solver_stalled);
  EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
}

TEST(Error, ContextKeepsKindAndPrefixesMessage) {
  const Error inner(ErrorKind::io, "cannot open 'x'");
  const Error outer("[load] ", inner);
  EXPECT_EQ(outer.kind(), ErrorKind::io);
  EXPECT_STREQ(outer.what(), "[load] i/o error: cannot open 'x'");
}
