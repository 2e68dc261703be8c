#include "support.hpp"

#include <gtest/gtest.h>

using namespace coeba;
using namespace coeba::testing;

TEST(HitsAtK, Examples) {
  EXPECT_EQ(hits_at_k(std::vector<Real>{0.9, 0.8}, std::vector<Real>{0.1, 0.2, 0.3}, 2), 1.0);
  EXPECT_EQ(hits_at_k(std::vector<Real>{0.1, 0.2}, std::vector<Real>{0.5, 0.6, 0.7}, 2), 0.0);
  EXPECT_EQ(hits_at_k(std::vector<Real>{0.9, 0.3}, std::vector<Real>{0.8, 0.6, 0.5}, 2), 0.5);
}

TEST(HitsAtK, TiesLose) {
  EXPECT_EQ(hits_at_k(std::vector<Real>{0.6}, std::vector<Real>{0.8, 0.6, 0.5}, 2), 0.0);
}

TEST(HitsAtK, TooFewNegatives) {
  EXPECT_THROW(hits_at_k(std::vector<Real>{0.5}, std::vector<Real>{0.1}, 2), MetricError);
}

TEST(HitsAtK, AgreesWithBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_pos = 1 + uniform_index(rng, 40);
    const std::size_t n_neg = 1 + uniform_index(rng, 60);
    const int k = 1 + static_cast<int>(uniform_index(rng, n_neg));
    const bool coarse = trial % 3 == 0;  // many exact ties
    auto draw = [&] {
      return coarse ? static_cast<Real>(uniform_index(rng, 6)) : uniform01(rng);
    };
    std::vector<Real> pos(n_pos), neg(n_neg);
    for (Real& s : pos) s = draw();
    for (Real& s : neg) s = draw();
    ASSERT_EQ(hits_at_k(pos, neg, k), hits_oracle(pos, neg, k)) << "trial " << trial;
  }
}

TEST(HitsAtK, InvariantUnderMonotoneTransform) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Real> pos(20), neg(30);
    for (Real& s : pos) s = 4 * uniform01(rng) - 2;
    for (Real& s : neg) s = 4 * uniform01(rng) - 2;
    auto f = [](Real s) { return sigmoid(3 * s) + s * s * s; };
    std::vector<Real> fp, fn;
    for (Real s : pos) fp.push_back(f(s));
    for (Real s : neg) fn.push_back(f(s));
    for (int k : {1, 5, 30}) EXPECT_EQ(hits_at_k(pos, neg, k), hits_at_k(fp, fn, k));
  }
}

TEST(HitsAtK, MonotoneInK) {
  Rng rng(8);
  std::vector<Real> pos(50), neg(100);
  for (Real& s : pos) s = uniform01(rng);
  for (Real& s : neg) s = uniform01(rng);
  for (int k = 1; k < 100; ++k) EXPECT_LE(hits_at_k(pos, neg, k), hits_at_k(pos, neg, k + 1));
}

TEST(MeanStd, SampleStd) {
  EXPECT_EQ(mean_std(std::vector<Real>{0.7}).std, 0.0);
  const MeanStd m = mean_std(std::vector<Real>{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.std, std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(DistanceDiagnostic, CoincidingNeighbors) {
  // Two triangles collapsed to two points: connected pairs have distance 0.
  const Graph g = two_triangles();
  Matrix z(6, 2);
  z << 0, 0, 0, 0, 0, 0, 3, 4, 3, 4, 3, 4;
  const DistanceStats s = distance_diagnostic(z, g, 0, 1);
  EXPECT_EQ(s.connected_mean, 0.0);
  EXPECT_EQ(s.connected.size(), 6u);
  EXPECT_EQ(s.unconnected.size(), 6u);
  EXPECT_GT(s.unconnected_mean, 0.0);
}

TEST(DistanceDiagnostic, IdenticalEmbeddings) {
  const DistanceStats s = distance_diagnostic(Matrix::Constant(6, 3, 0.4), six_node(), 0, 1);
  EXPECT_EQ(s.connected_mean, 0.0);
  EXPECT_EQ(s.unconnected_mean, 0.0);
}

TEST(Modularity, TwoTriangles) {
  const Graph g = two_triangles();
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  EXPECT_NEAR(modularity(g, labels), 0.5, 1e-15);
  const ClusterStats s = cluster_stats_for(g, labels, 2);
  EXPECT_EQ(s.densities, (std::vector<Real>{1.0, 1.0}));
  EXPECT_NEAR(s.graph_density, 6.0 / 15.0, 1e-15);
}

TEST(Modularity, SingleCommunityIsZero) {
  for (const Graph& g : {six_node(), two_triangles(), planted_partition({}).graph}) {
    const std::vector<int> labels(static_cast<std::size_t>(g.n_nodes()), 0);
    EXPECT_EQ(modularity(g, labels), 0.0);
  }
}

TEST(KMeans, RecoversTwoTrianglesFromEmbeddings) {
  Matrix z(6, 2);
  z << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 5.1, 5, 5, 5.1;
  const ClusterStats s = cluster_diagnostic(z, two_triangles(), 2, 0);
  EXPECT_NEAR(s.modularity, 0.5, 1e-15);
  EXPECT_EQ(s.densities, (std::vector<Real>{1.0, 1.0}));
}

TEST(KMeans, RejectsBadK) {
  const Matrix z = random_matrix(4, 2, 1);
  EXPECT_THROW(kmeans(z, 5, 0), ConfigError);
  EXPECT_THROW(kmeans(z, 1, 0), ConfigError);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  const Matrix z = random_matrix(200, 5, 3);
  const KMeansResult r = kmeans(z, 6, 11);
  ASSERT_GE(r.best_restart, 0);
  for (const auto& trace : r.traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] * (1 + 1e-12));
  }
  // The winner has the lowest final objective among successful restarts.
  for (const auto& trace : r.traces) {
    if (!trace.empty()) {
      EXPECT_LE(r.objective, trace.back());
    }
  }
}

TEST(KMeans, Deterministic) {
  const Matrix z = random_matrix(100, 4, 3);
  EXPECT_EQ(kmeans(z, 5, 1).labels, kmeans(z, 5, 1).labels);
}

TEST(Pearson, Examples) {
  EXPECT_NEAR(pearson(std::vector<Real>{1, 2, 3}, std::vector<Real>{2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<Real>{1, 2, 3}, std::vector<Real>{-1, -2, -3}), -1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<Real>{1, 2, 3}, std::vector<Real>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_THROW(pearson(std::vector<Real>{1, 1, 1}, std::vector<Real>{1, 2, 3}), MetricError);
}

TEST(Histogram, CountsEverything) {
  const std::vector<Real> xs{0.0, 0.1, 0.5, 0.99, 1.0};
  const auto h = histogram(xs, 0.0, 1.0, 4);
  std::size_t total = 0;
  for (const auto& [center, n] : h) total += n;
  EXPECT_EQ(total, xs.size());
  EXPECT_EQ(h[0].second, 2u);
  EXPECT_EQ(h[3].second, 2u);
}
