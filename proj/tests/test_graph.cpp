#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace coeba;
using namespace coeba::testing;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::set<std::pair<NodeId, NodeId>> as_set(const EdgeList& es) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const Edge& e : es) s.emplace(e.u, e.v);
  return s;
}

}  // namespace

TEST(Graph, CanonicalizesAndDeduplicates) {
  const Graph g = Graph::structure_only(4, edges({{1, 0}, {0, 1}, {2, 2}, {3, 2}, {2, 3}}));
  ASSERT_EQ(g.n_edges(), 2u);
  EXPECT_EQ(g.edges()[0], Edge(0, 1));
  EXPECT_EQ(g.edges()[1], Edge(2, 3));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_FALSE(g.has_edge(2, 2));
  EXPECT_EQ(g.degree(3), 1u);
}

TEST(Graph, RejectsOutOfRangeIds) {
  EXPECT_THROW(Graph::structure_only(3, edges({{0, 3}})), RangeError);
  EXPECT_THROW(Graph(3, EdgeList{}, Matrix::Zero(2, 4)), ShapeError);
}

TEST(Graph, Degrees) {
  EXPECT_EQ(degrees(path3()).degree, (std::vector<std::int64_t>{1, 2, 1}));
  EXPECT_EQ(degrees(path3()).min, 1);
  EXPECT_EQ(degrees(Graph::structure_only(2, {})).degree, (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(degrees(Graph::structure_only(2, {})).min, 0);
  EXPECT_EQ(degrees(triangle()).degree, (std::vector<std::int64_t>{2, 2, 2}));
  EXPECT_EQ(degrees(triangle()).min, 2);
}

TEST(NormalizedAdjacency, SingleEdgeIsAllHalves) {
  const Matrix a = Matrix(normalized_adjacency(Graph::structure_only(2, edges({{0, 1}}))).matrix);
  EXPECT_EQ(a, Matrix::Constant(2, 2, 0.5));
}

TEST(NormalizedAdjacency, IsolatedNode) {
  const Matrix a = Matrix(normalized_adjacency(Graph::structure_only(1, {})).matrix);
  ASSERT_EQ(a.rows(), 1);
  EXPECT_EQ(a(0, 0), 1.0);
}

TEST(NormalizedAdjacency, SymmetricAndRegularRowSums) {
  for (const Graph& g : {six_node(), complete(5), triangle(), two_triangles()}) {
    const Matrix a = Matrix(normalized_adjacency(g).matrix);
    EXPECT_EQ(a, a.transpose());
  }
  // Regular graphs: every row of D^-1/2 (A+I) D^-1/2 sums to 1.
  for (const Graph& g : {complete(5), triangle(), two_triangles()}) {
    const Vector rows = Matrix(normalized_adjacency(g).matrix).rowwise().sum();
    for (Index i = 0; i < rows.size(); ++i) EXPECT_NEAR(rows(i), 1.0, 1e-15);
  }
  const Vector rows = Matrix(normalized_adjacency(path3()).matrix).rowwise().sum();
  EXPECT_GT(std::abs(rows(0) - 1.0), 1e-3);
}

TEST(SampleNegatives, SingleNonEdge) {
  const Graph g = Graph::structure_only(3, edges({{0, 1}, {1, 2}}));
  EXPECT_EQ(sample_negatives(g, 1, 0), edges({{0, 2}}));
  EXPECT_TRUE(sample_negatives(g, 0, 0).empty());
  EXPECT_THROW(sample_negatives(g, 2, 0), SamplingError);
}

TEST(SampleNegatives, EmptyGraphGivesDistinctPairs) {
  const Graph g = Graph::structure_only(5, {});
  const EdgeList neg = sample_negatives(g, 10, 3);
  EXPECT_EQ(neg.size(), 10u);
  EXPECT_EQ(as_set(neg).size(), 10u);
  for (const Edge& e : neg) EXPECT_NE(e.u, e.v);
}

TEST(SampleNegatives, NeverHitsEdgesOrExclusions) {
  const auto pp = planted_partition({.n_nodes = 80, .communities = 4, .p_in = 0.3, .p_out = 0.02});
  const Graph& g = pp.graph;
  const EdgeList exclude = sample_negatives(g, 200, 99);
  const auto ex = edge_key_set(exclude);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t count = seed % 2 ? 50 : 2000;  // rejection and enumeration regimes
    const EdgeList neg = sample_negatives(g, count, seed, exclude);
    ASSERT_EQ(neg.size(), count);
    EXPECT_EQ(as_set(neg).size(), count);
    for (const Edge& e : neg) {
      ASSERT_FALSE(g.has_edge(e.u, e.v));
      ASSERT_FALSE(ex.count(pair_key(e.u, e.v)));
      ASSERT_NE(e.u, e.v);
    }
  }
}

TEST(SplitEdges, CountsFollowFloors) {
  EdgeList e;
  for (NodeId i = 0; i < 100; ++i) e.emplace_back(i, i + 1);
  const Graph g = Graph::structure_only(101, e);
  const EdgeSplit s = split_edges(g, {}, 4);
  EXPECT_EQ(s.train_pos.size(), 85u);
  EXPECT_EQ(s.valid_pos.size(), 5u);
  EXPECT_EQ(s.test_pos.size(), 10u);
  EXPECT_EQ(s.valid_neg.size(), 5u);
  EXPECT_EQ(s.test_neg.size(), 10u);
  EXPECT_EQ(split_edges(g, {}, 4), s);
  EXPECT_NE(split_edges(g, {}, 5), s);
}

TEST(SplitEdges, PartitionsTheEdgeSet) {
  const Graph g = planted_partition({}).graph;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EdgeSplit s = split_edges(g, {}, seed);
    auto tr = as_set(s.train_pos), va = as_set(s.valid_pos), te = as_set(s.test_pos);
    std::set<std::pair<NodeId, NodeId>> all;
    all.insert(tr.begin(), tr.end());
    all.insert(va.begin(), va.end());
    all.insert(te.begin(), te.end());
    EXPECT_EQ(all, as_set(g.edges()));
    EXPECT_EQ(tr.size() + va.size() + te.size(), g.n_edges());
    for (const Edge& x : s.test_neg) EXPECT_FALSE(as_set(s.valid_neg).count({x.u, x.v}));
  }
}

TEST(SplitEdges, Errors) {
  EXPECT_THROW(split_edges(complete(4), {}, 0), SplitError);
  EXPECT_THROW(split_edges(complete(10), {0.8, 0.1, 0.2}, 0), ConfigError);
}

TEST(SplitManifest, RoundTrip) {
  TempDir dir("manifest");
  const EdgeSplit s = split_edges(planted_partition({}).graph, {}, 2);
  write_split_manifest(dir / "m.txt", s);
  const EdgeSplit back = read_split_manifest(dir / "m.txt");
  EXPECT_EQ(back, s);
  EXPECT_EQ(split_hash(back), split_hash(s));
}

TEST(GraphIO, RoundTripIsExact) {
  TempDir dir("io");
  const Graph g = six_node();
  save_graph(g, dir / "g.edges", dir / "g.features");
  const Graph back = load_graph(dir / "g.edges", dir / "g.features");
  EXPECT_EQ(back, g);
  save_graph(back, dir / "h.edges", dir / "h.features");
  const Graph again = load_graph(dir / "h.edges", dir / "h.features");
  EXPECT_EQ(again, g);
}

TEST(GraphIO, SymmetrizesBothDirectionLists) {
  TempDir dir("sym");
  write_file(dir / "e", "0 1\n1 0\n# comment\n1 2\n2 1\n");
  write_file(dir / "f", "3 2\n1 0\n0 1\n1 1\n");
  const Graph g = load_graph(dir / "e", dir / "f");
  EXPECT_EQ(g.n_edges(), 2u);
  EXPECT_EQ(g.feature_dim(), 2);
}

TEST(GraphIO, ReportsParseErrorsWithLine) {
  TempDir dir("bad");
  write_file(dir / "e", "0 1\n1 x\n");
  write_file(dir / "f", "3 1\n1\n1\n1\n");
  try {
    load_graph(dir / "e", dir / "f");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  write_file(dir / "e2", "0 7\n");
  EXPECT_THROW(load_graph(dir / "e2", dir / "f"), RangeError);
  write_file(dir / "f2", "3 2\n1 1\n1\n1 1\n");
  EXPECT_THROW(load_graph(dir / "e2", dir / "f2"), DataError);
  EXPECT_THROW(load_graph(dir / "missing", dir / "f"), DataError);
}
