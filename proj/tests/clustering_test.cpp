#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cbmbr/clustering.hpp"
#include "oracles.hpp"

namespace cbmbr {
namespace {

using testing::brute_distance;
using testing::brute_nearest;
using testing::random_matrix;

std::set<std::vector<double>> row_set(const CentroidMatrix& m) {
  std::set<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.insert(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return out;
}

TEST(KMeansPlusPlus, TwoPointsForceBothCentroids) {
  auto pts = EmbeddingMatrix::from_rows({{0, 0}, {10, 0}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto c = kmeanspp_init(pts, 2, rng);
    EXPECT_EQ(row_set(c), (std::set<std::vector<double>>{{0, 0}, {10, 0}}));
  }
}

TEST(KMeansPlusPlus, CoincidentPointsFallBackToUniform) {
  auto pts = EmbeddingMatrix::from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  std::set<std::size_t> second_picks;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto idx = kmeanspp_seed_indices(pts, 2, rng);
    second_picks.insert(idx[1]);
    Rng again(seed);
    const auto c = kmeanspp_init(pts, 2, again);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(c(j, 0), 1.0);
      EXPECT_EQ(c(j, 1), 1.0);
    }
  }
  EXPECT_EQ(second_picks.size(), 4u);  // every point reachable
}

TEST(KMeansPlusPlus, SecondPickFollowsSquaredDistanceWeights) {
  // d^2 from (0,0) is {0, 1, 16}: weights 0, 1/17, 16/17.
  auto pts = EmbeddingMatrix::from_rows({{0, 0}, {1, 0}, {4, 0}});
  std::vector<double> freq(3, 0.0);
  std::size_t trials = 0;
  for (std::uint64_t seed = 0; trials < 100000; ++seed) {
    Rng rng(seed);
    const auto idx = kmeanspp_seed_indices(pts, 2, rng);
    if (idx[0] != 0) continue;
    freq[idx[1]] += 1.0;
    ++trials;
  }
  const std::vector<double> expected{0.0, 1.0 / 17.0, 16.0 / 17.0};
  double l1 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) l1 += std::abs(freq[i] / double(trials) - expected[i]);
  EXPECT_LT(l1, 0.01);
  EXPECT_EQ(freq[0], 0.0);
}

TEST(KMeansPlusPlus, KTooLarge) {
  auto pts = EmbeddingMatrix::from_rows({{0, 0}, {1, 0}});
  Rng rng(0);
  try {
    kmeanspp_init(pts, 3, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::KTooLarge);
  }
}

TEST(KMeansPlusPlus, DistinctPointsGiveDistinctCentroids) {
  Rng gen(9);
  const auto pts = random_matrix(gen, 20, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto idx = kmeanspp_seed_indices(pts, 20, rng);
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(std::unique(idx.begin(), idx.end()), idx.end());
  }
}

TEST(RandomInit, SamplesWithoutReplacement) {
  Rng gen(4);
  const auto pts = random_matrix(gen, 10, 2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    EXPECT_EQ(row_set(random_init(pts, 10, rng)).size(), 10u);
  }
}

TEST(AssignStep, Examples) {
  auto pts = EmbeddingMatrix::from_rows({{0, 0}, {1, 0}, {9, 0}, {10, 0}});
  EXPECT_EQ(assign_step(pts, CentroidMatrix::from_rows({{3, 3}})), (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_EQ(assign_step(pts, CentroidMatrix::from_rows({{0.5, 0}, {9.5, 0}})), (std::vector<std::size_t>{0, 0, 1, 1}));
  auto mid = EmbeddingMatrix::from_rows({{5, 0}});
  EXPECT_EQ(assign_step(mid, CentroidMatrix::from_rows({{0, 0}, {10, 0}})), (std::vector<std::size_t>{0}));
}

TEST(AssignStep, DimensionMismatch) {
  auto pts = EmbeddingMatrix::from_rows({{0, 0}});
  try {
    assign_step(pts, CentroidMatrix::from_rows({{0, 0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(UpdateStep, Examples) {
  auto two = EmbeddingMatrix::from_rows({{0, 0}, {2, 0}});
  EXPECT_EQ(update_step(two, {0, 0}, 1, CentroidMatrix::from_rows({{9, 9}})), CentroidMatrix::from_rows({{1, 0}}));

  auto four = EmbeddingMatrix::from_rows({{0, 0}, {1, 0}, {9, 0}, {10, 0}});
  EXPECT_EQ(update_step(four, {0, 0, 1, 1}, 2, CentroidMatrix::from_rows({{0, 0}, {0, 0}})),
            CentroidMatrix::from_rows({{0.5, 0}, {9.5, 0}}));

  // empty cluster keeps its previous centroid
  EXPECT_EQ(update_step(four, {0, 0, 0, 0}, 2, CentroidMatrix::from_rows({{0, 0}, {7, 7}})),
            CentroidMatrix::from_rows({{5, 0}, {7, 7}}));
}

TEST(UpdateStep, DimensionMismatch) {
  auto pts = EmbeddingMatrix::from_rows({{0, 0}, {1, 1}});
  EXPECT_THROW(update_step(pts, {0}, 1, CentroidMatrix::from_rows({{0, 0}})), Error);
  EXPECT_THROW(update_step(pts, {0, 0}, 1, CentroidMatrix::from_rows({{0, 0, 0}})), Error);
}

TEST(RunKMeans, KEqualsNGivesSingletons) {
  Rng gen(21);
  const auto pts = random_matrix(gen, 12, 4);
  KMeansConfig cfg;
  cfg.k = 12;
  cfg.niter = 1;
  cfg.seed = 3;
  const auto cl = run_kmeans(pts, cfg);
  EXPECT_EQ(row_set(cl.centroids), row_set(pts.cast<double>()));
  EXPECT_TRUE(std::all_of(cl.counts.begin(), cl.counts.end(), [](std::size_t c) { return c == 1; }));
}

TEST(RunKMeans, KOneIsTheMeanForAnyNiterAndSeed) {
  Rng gen(22);
  const auto pts = random_matrix(gen, 30, 5);
  const auto mean = column_mean(pts);
  for (unsigned niter : {0u, 1u, 2u, 5u})
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
      KMeansConfig cfg{1, niter, KMeansInit::KMeansPlusPlus, seed, 1};
      const auto cl = run_kmeans(pts, cfg);
      EXPECT_EQ(std::vector<double>(cl.centroids.row(0).begin(), cl.centroids.row(0).end()), mean);
      EXPECT_EQ(cl.counts, std::vector<std::size_t>{30});
    }
}

TEST(RunKMeans, SeparatedBlobsRecoverBlobSizes) {
  Rng gen(23);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 37; ++i) rows.push_back({float(0.3 * gen.normal()), float(0.3 * gen.normal())});
  for (int i = 0; i < 13; ++i) rows.push_back({float(100 + 0.3 * gen.normal()), float(0.3 * gen.normal())});
  const auto pts = EmbeddingMatrix::from_rows(rows);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cl = run_kmeans(pts, KMeansConfig{2, 1, KMeansInit::KMeansPlusPlus, seed, 1});
    auto counts = cl.counts;
    std::sort(counts.begin(), counts.end());
    EXPECT_EQ(counts, (std::vector<std::size_t>{13, 37}));
    for (std::size_t i = 0; i < pts.rows(); ++i) EXPECT_EQ(cl.assignments[i], brute_nearest(pts.row(i), cl.centroids));
  }
}

TEST(RunKMeans, RejectsBadConfig) {
  auto pts = EmbeddingMatrix::from_rows({{0}, {1}});
  EXPECT_THROW(run_kmeans(pts, KMeansConfig{3, 1, KMeansInit::KMeansPlusPlus, 0, 1}), Error);
  EXPECT_THROW(run_kmeans(pts, KMeansConfig{0, 1, KMeansInit::KMeansPlusPlus, 0, 1}), Error);
  EXPECT_THROW(run_kmeans(pts, KMeansConfig{1, 33, KMeansInit::KMeansPlusPlus, 0, 1}), Error);
}

TEST(RunKMeans, DeterministicAcrossSeedsAndThreads) {
  Rng gen(24);
  const auto pts = random_matrix(gen, 200, 6);
  for (auto init : {KMeansInit::KMeansPlusPlus, KMeansInit::RandomFromSamples}) {
    const auto a = run_kmeans(pts, KMeansConfig{9, 3, init, 5, 1});
    const auto b = run_kmeans(pts, KMeansConfig{9, 3, init, 5, 4});
    EXPECT_EQ(a.centroids, b.centroids);
    EXPECT_EQ(a.assignments, b.assignments);
    Rng r1(77), r2(77);
    EXPECT_EQ(kmeanspp_init(pts, 9, r1), kmeanspp_init(pts, 9, r2));
  }
}

// Type invariants over random instances: N <= 64, D <= 8, k <= N.
TEST(RunKMeansProperty, ClusteringInvariants) {
  Rng gen(25);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen.uniform_index(64);
    const std::size_t d = 1 + gen.uniform_index(8);
    const std::size_t k = 1 + gen.uniform_index(n);
    const auto pts = random_matrix(gen, n, d);
    const KMeansConfig cfg{k, static_cast<unsigned>(gen.uniform_index(4)),
                           gen.uniform_index(2) ? KMeansInit::KMeansPlusPlus : KMeansInit::RandomFromSamples,
                           gen.next_u64(), 1};
    const auto cl = run_kmeans(pts, cfg);
    ASSERT_EQ(cl.assignments.size(), n);
    ASSERT_EQ(cl.counts.size(), k);
    EXPECT_EQ(cl.counts, cluster_counts(cl.assignments, k));
    std::size_t total = 0, update_total = 0;
    for (auto c : cl.counts) total += c;
    for (auto c : cl.update_counts) update_total += c;
    EXPECT_EQ(total, n);
    EXPECT_EQ(update_total, n);
    for (std::size_t i = 0; i < n; ++i) {
      double best = INFINITY;
      for (std::size_t j = 0; j < k; ++j) best = std::min(best, brute_distance(pts.row(i), cl.centroids.row(j)));
      const double mine = brute_distance(pts.row(i), cl.centroids.row(cl.assignments[i]));
      EXPECT_LE(mine, best + 1e-9 * (1.0 + best));
    }
    // weighted centroids reproduce the point sum whenever an update ran
    if (cfg.niter > 0 || k == 1) {
      for (std::size_t dd = 0; dd < d; ++dd) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t j = 0; j < k; ++j) lhs += double(cl.update_counts[j]) * cl.centroids(j, dd);
        for (std::size_t i = 0; i < n; ++i) rhs += pts(i, dd);
        EXPECT_NEAR(lhs, rhs, 1e-9 * (1.0 + std::abs(rhs)));
      }
    }
  }
}

TEST(LloydProperty, InertiaNeverIncreases) {
  Rng gen(26);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen.uniform_index(63);
    const std::size_t d = 1 + gen.uniform_index(8);
    const std::size_t k = 1 + gen.uniform_index(n);
    const auto pts = random_matrix(gen, n, d);
    Rng rng(gen.next_u64());
    auto centroids = kmeanspp_init(pts, k, rng);
    auto assignments = assign_step(pts, centroids);
    double prev = inertia(pts, centroids, assignments);
    for (int it = 0; it < 4; ++it) {
      centroids = update_step(pts, assignments, k, centroids);
      const double after_update = inertia(pts, centroids, assignments);
      EXPECT_LE(after_update, prev * (1 + 1e-12) + 1e-12);
      assignments = assign_step(pts, centroids);
      const double after_assign = inertia(pts, centroids, assignments);
      EXPECT_LE(after_assign, after_update * (1 + 1e-12) + 1e-12);
      prev = after_assign;
    }
  }
}

}  // namespace
}  // namespace cbmbr
