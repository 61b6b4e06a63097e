#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfgtune/archive.hpp"
#include "cfgtune/rng.hpp"
#include "support.hpp"

namespace cfgtune {
namespace {

Individual ind(double size, double flops, double eff) {
  return {Configuration{}, {size, flops, -eff}, 0.0};
}

std::vector<ObjectiveVector> sorted(std::vector<ObjectiveVector> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(Dominates, Examples) {
  EXPECT_TRUE(dominates({1, 1, -0.9}, {2, 2, -0.8}));
  EXPECT_FALSE(dominates({1, 3, -0.9}, {2, 2, -0.8}));
  EXPECT_FALSE(dominates({1, 1, -0.9}, {1, 1, -0.9}));
  EXPECT_TRUE(dominates({1, 1, -0.9}, {1, 1, -0.8}));
}

TEST(Archive, Examples) {
  ParetoArchive archive;
  EXPECT_TRUE(archive.insert(ind(2, 2, 0.8)));
  EXPECT_TRUE(archive.insert(ind(1, 3, 0.8)));
  EXPECT_EQ(archive.size(), 2u);
  EXPECT_FALSE(archive.insert(ind(3, 3, 0.7)));
  EXPECT_TRUE(archive.insert(ind(1, 1, 0.9)));
  ASSERT_EQ(archive.size(), 1u);
  EXPECT_EQ(archive.members().front().objectives, (ObjectiveVector{1, 1, -0.9}));
}

TEST(Archive, EqualObjectivesKeepFirst) {
  ParetoArchive archive;
  auto a = ind(1, 1, 0.5);
  a.config.at(0) = std::string("first");
  auto b = ind(1, 1, 0.5);
  b.config.at(0) = std::string("second");
  EXPECT_TRUE(archive.insert(a));
  EXPECT_FALSE(archive.insert(b));
  ASSERT_EQ(archive.size(), 1u);
  EXPECT_EQ(std::get<std::string>(archive.members().front().config.at(0)), "first");
}

TEST(Archive, MatchesBruteForceInAnyOrder) {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Individual> cands;
    for (int k = 0; k < 100; ++k) {
      // Coarse grid so that ties and duplicates occur.
      cands.push_back(ind(static_cast<double>(rng.uniform_index(8)),
                          static_cast<double>(rng.uniform_index(8)),
                          static_cast<double>(rng.uniform_index(8)) / 8.0));
    }
    std::vector<ObjectiveVector> pts;
    for (const auto& c : cands) pts.push_back(c.objectives);
    const auto expected = sorted(testing::brute_force_front(pts));
    for (int order = 0; order < 3; ++order) {
      std::shuffle(cands.begin(), cands.end(), rng.engine());
      ParetoArchive archive;
      archive.update(cands);
      EXPECT_EQ(sorted(archive.objectives()), expected);
    }
    EXPECT_EQ(sorted(non_dominated(pts)), expected);
  }
}

TEST(Archive, UpdateArchiveIsFunctional) {
  ParetoArchive empty;
  const std::vector<Individual> cands = {ind(1, 2, 0.5), ind(2, 1, 0.5)};
  const auto out = update_archive(empty, cands);
  EXPECT_TRUE(empty.empty());
  EXPECT_EQ(out.size(), 2u);
}

// Counts unit cells [a,a+1]x[b,b+1]x[c,c+1] below ref dominated by an integer
// point set.
double grid_hypervolume(const std::vector<ObjectiveVector>& pts, int ref) {
  double count = 0.0;
  for (int a = 0; a < ref; ++a)
    for (int b = 0; b < ref; ++b)
      for (int c = 0; c < ref; ++c) {
        for (const auto& p : pts) {
          if (p.size_mb <= a && p.gflops <= b && p.neg_effectiveness <= c) {
            count += 1.0;
            break;
          }
        }
      }
  return count;
}

TEST(Hypervolume, Examples) {
  const ObjectiveVector ref{2, 2, 2};
  const std::vector<ObjectiveVector> one = {{1, 1, 1}};
  EXPECT_EQ(hypervolume(one, ref), 1.0);
  const std::vector<ObjectiveVector> origin = {{0, 0, 0}};
  EXPECT_EQ(hypervolume(origin, ref), 8.0);
  const std::vector<ObjectiveVector> outside = {{3, 0, 0}, {0, 2, 0}};
  EXPECT_EQ(hypervolume(outside, ref), 0.0);
  EXPECT_EQ(hypervolume({}, ref), 0.0);
}

TEST(Hypervolume, MatchesGridCount) {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ObjectiveVector> pts;
    const auto n = 1 + rng.uniform_index(12);
    for (std::uint64_t k = 0; k < n; ++k) {
      pts.push_back({static_cast<double>(rng.uniform_index(10)),
                     static_cast<double>(rng.uniform_index(10)),
                     static_cast<double>(rng.uniform_index(10))});
    }
    EXPECT_EQ(hypervolume(pts, {10, 10, 10}), grid_hypervolume(pts, 10));
  }
}

TEST(Hypervolume, AddingPointsNeverDecreases) {
  Rng rng(53);
  std::vector<ObjectiveVector> pts;
  double prev = 0.0;
  for (int k = 0; k < 200; ++k) {
    pts.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01()});
    const double hv = hypervolume(pts, {1, 1, 1});
    EXPECT_GE(hv, prev);
    prev = hv;
  }
}

TEST(CrowdingDistance, BoundariesAreInfinite) {
  const std::vector<ObjectiveVector> pts = {{0, 4, 0}, {1, 3, 0}, {2, 2, 0}, {4, 0, 0}};
  const auto d = crowding_distance(pts);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_TRUE(std::isinf(d[0]));
  EXPECT_TRUE(std::isinf(d[3]));
  // Interior: (2-0)/4 + (4-2)/4 = 1 and (4-1)/4 + (3-0)/4 = 1.5.
  EXPECT_DOUBLE_EQ(d[1], 1.0);
  EXPECT_DOUBLE_EQ(d[2], 1.5);
}

TEST(CrowdingDistance, SmallSets) {
  EXPECT_TRUE(crowding_distance({}).empty());
  const std::vector<ObjectiveVector> two = {{0, 0, 0}, {1, 1, 1}};
  for (double d : crowding_distance(two)) EXPECT_TRUE(std::isinf(d));
}

}  // namespace
}  // namespace cfgtune
