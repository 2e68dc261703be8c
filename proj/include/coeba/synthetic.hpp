#pragma once

// Planted-partition graphs with community-correlated bag-of-words features.
// Used for tests and quick demos when no benchmark dataset is at hand.

#include "coeba/common.hpp"
#include "coeba/graph.hpp"

#include <string>

namespace coeba {

struct PlantedPartitionConfig {
  NodeId n_nodes = 300;
  int communities = 5;
  Real p_in = 0.06;
  Real p_out = 0.004;
  Index feature_dim = 200;
  Real p_topic_word = 0.15;  // chance a node uses each word of its community's topic
  Real p_noise_word = 0.01;  // chance of any other word
  std::uint64_t seed = 0;
};

struct PlantedPartition {
  Graph graph;
  std::vector<int> community;
};

/// Nodes are assigned round-robin to communities; each community owns a
/// contiguous block of feature columns as its topic.
inline PlantedPartition planted_partition(const PlantedPartitionConfig& c) {
  if (c.communities < 1 || c.n_nodes < 1 || c.feature_dim < c.communities) {
    throw ConfigError("planted partition: invalid sizes");
  }
  Rng rng(derive_seed(c.seed, 0x73796e7468));
  PlantedPartition out;
  out.community.resize(static_cast<std::size_t>(c.n_nodes));
  for (NodeId v = 0; v < c.n_nodes; ++v) out.community[v] = static_cast<int>(v % c.communities);

  EdgeList edges;
  for (NodeId a = 0; a < c.n_nodes; ++a) {
    for (NodeId b = a + 1; b < c.n_nodes; ++b) {
      const Real p = out.community[a] == out.community[b] ? c.p_in : c.p_out;
      if (uniform01(rng) < p) edges.emplace_back(a, b);
    }
  }

  const Index block = c.feature_dim / c.communities;
  std::vector<Triplet> t;
  for (NodeId v = 0; v < c.n_nodes; ++v) {
    const Index lo = out.community[v] * block;
    for (Index f = 0; f < c.feature_dim; ++f) {
      const bool topic = f >= lo && f < lo + block;
      if (uniform01(rng) < (topic ? c.p_topic_word : c.p_noise_word)) t.emplace_back(v, f, 1.0);
    }
  }
  SparseMatrix x(c.n_nodes, c.feature_dim);
  x.setFromTriplets(t.begin(), t.end());
  out.graph = Graph(c.n_nodes, edges, std::move(x));
  return out;
}

}  // namespace coeba
