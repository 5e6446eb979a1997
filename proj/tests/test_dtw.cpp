#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"

using namespace intentmarl;

TEST(Dtw, IdenticalSequencesAreZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_sequence(rng, 8, 10);
    EXPECT_EQ(dtw_distance(t, t), 0.0);
  }
}

TEST(Dtw, SinglePointPairIsEuclidean) {
  const Trajectory a{{0, 0}}, b{{3, 4}};
  EXPECT_DOUBLE_EQ(dtw_distance(a, b), 5.0);
}

TEST(Dtw, SmallHandCase) {
  const Trajectory a{{0, 0}, {1, 0}, {2, 0}}, b{{0, 0}, {2, 0}};
  // (0,0)-(0,0), (1,0)-(0,0) or (1,0)-(2,0), (2,0)-(2,0): cost 1.
  EXPECT_DOUBLE_EQ(dtw_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(dtw_distance(a, b), oracle::brute_force_dtw(a, b));
}

TEST(Dtw, Symmetric) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_sequence(rng, 6, 8), b = oracle::random_sequence(rng, 6, 8);
    EXPECT_NEAR(dtw_distance(a, b), dtw_distance(b, a), 1e-12);
  }
}

TEST(Dtw, RepeatedCellsCostNothing) {
  const Trajectory a{{0, 0}, {1, 1}, {2, 2}}, b{{0, 0}, {0, 0}, {1, 1}, {1, 1}, {1, 1}, {2, 2}};
  EXPECT_EQ(dtw_distance(a, b), 0.0);
}

TEST(Dtw, EmptyRejected) {
  const Trajectory a{{0, 0}}, empty;
  EXPECT_THROW(dtw_distance(a, empty), std::invalid_argument);
  EXPECT_THROW(dtw_distance(empty, a), std::invalid_argument);
}

TEST(Dtw, MatchesBruteForceEnumeration) {
  const auto rep = oracle::check_dtw_against_oracle(1e-9);
  EXPECT_EQ(rep.mismatches, 0) << "worst error " << rep.worst;
  EXPECT_GT(rep.compared, 1000000);
}
