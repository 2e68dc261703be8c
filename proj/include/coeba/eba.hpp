#pragma once

// Edge Balancing Augmentation: prune each node's least-confident incident
// edges, link it to its most embedding-similar non-neighbors, and mask
// feature columns.

#include "coeba/common.hpp"
#include "coeba/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace coeba {

struct EBAConfig {
  Real r_m = 0.14;   // neighbor removal ratio
  Real r_a = 0.40;   // neighbor addition ratio
  Real p_f = 0.2;    // feature column mask rate
  int period = 20;   // re-augment every `period` epochs
  int warmup_epochs = 200;
  bool enabled = true;  // false: the augmented view is the original graph

  void validate() const {
    auto frac = [](Real x, const char* name) {
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must be in [0,1]");
    };
    frac(r_m, "eba.r_m");
    frac(r_a, "eba.r_a");
    frac(p_f, "eba.p_f");
    if (enabled && !(r_a > r_m)) throw ConfigError("eba.r_a must exceed eba.r_m");
    if (period <= 0) throw ConfigError("eba.period must be positive");
    if (warmup_epochs < 0) throw ConfigError("eba.warmup_epochs must be non-negative");
  }

  friend bool operator==(const EBAConfig&, const EBAConfig&) = default;
};

struct AugmentedView {
  Graph graph;  // A' and X'
  int epoch = 0;
  EBAConfig config;
};

/// floor(ratio * degree), nudged so that products such as 0.29 * 100 do not
/// land one below the exact integer.
inline std::size_t ratio_count(Real ratio, std::size_t degree) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<Real>(degree) + 1e-9));
}

struct EdgeEdits {
  EdgeList removed;  // sorted, unique
  EdgeList added;    // sorted, unique
};

/// Computes the removal and addition sets. Each node v marks its
/// floor(r_m d_v) incident edges with the lowest predicted probability
/// (ties by smaller neighbor id); an edge marked by either endpoint is
/// removed. Each node then links to its floor(r_a d_v) most cosine-similar
/// nodes that are not already its neighbors (ties by smaller id). The
/// result does not depend on node processing order.
inline EdgeEdits eba_edits(const Graph& g, const Matrix& z, const Matrix& a_pred, Real r_m,
                           Real r_a) {
  const NodeId n = g.n_nodes();
  if (z.rows() != n) {
    throw ShapeError("eba: embeddings have " + std::to_string(z.rows()) + " rows, graph has " +
                     std::to_string(n) + " nodes");
  }
  if (a_pred.rows() != n || a_pred.cols() != n) {
    throw ShapeError("eba: predicted matrix must be " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
  EdgeEdits edits;

  std::vector<NodeId> order;
  for (NodeId v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(v);
    const std::size_t k = std::min(ratio_count(r_m, nb.size()), nb.size());
    if (k == 0) continue;
    order.assign(nb.begin(), nb.end());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](NodeId a, NodeId b) {
                        const Real sa = a_pred(v, a), sb = a_pred(v, b);
                        return sa != sb ? sa < sb : a < b;
                      });
    for (std::size_t i = 0; i < k; ++i) edits.removed.emplace_back(v, order[i]);
  }

  Matrix unit(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const Real norm = z.row(i).norm();
    if (norm > 0.0) unit.row(i) = z.row(i) / norm;
    else unit.row(i).setZero();
  }
  Vector sim(n);
  std::vector<NodeId> candidates;
  for (NodeId v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(v);
    const std::size_t want = ratio_count(r_a, nb.size());
    if (want == 0) continue;
    sim.noalias() = unit * unit.row(v).transpose();
    candidates.clear();
    for (NodeId u = 0; u < n; ++u) {
      if (u != v && !std::binary_search(nb.begin(), nb.end(), u)) candidates.push_back(u);
    }
    const std::size_t k = std::min(want, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), [&](NodeId a, NodeId b) {
                        return sim(a) != sim(b) ? sim(a) > sim(b) : a < b;
                      });
    for (std::size_t i = 0; i < k; ++i) edits.added.emplace_back(v, candidates[i]);
  }

  for (EdgeList* l : {&edits.removed, &edits.added}) {
    std::sort(l->begin(), l->end());
    l->erase(std::unique(l->begin(), l->end()), l->end());
  }
  return edits;
}

/// Edge part of the augmentation; the returned view keeps the original
/// features (see mask_features).
inline AugmentedView eba_augment(const Graph& g, const Matrix& z, const Matrix& a_pred,
                                 const EBAConfig& cfg, int epoch = 0) {
  const EdgeEdits edits = eba_edits(g, z, a_pred, cfg.r_m, cfg.r_a);
  EdgeList kept;
  kept.reserve(g.n_edges() + edits.added.size());
  std::set_difference(g.edges().begin(), g.edges().end(), edits.removed.begin(),
                      edits.removed.end(), std::back_inserter(kept));
  kept.insert(kept.end(), edits.added.begin(), edits.added.end());
  return AugmentedView{g.with_edges(kept), epoch, cfg};
}

/// Zeroes each feature column independently with probability p_f.
inline SparseMatrix mask_features(const SparseMatrix& x, Real p_f, Rng& rng) {
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw ConfigError("feature mask rate must be in [0,1]");
  std::vector<char> drop(static_cast<std::size_t>(x.cols()));
  for (auto& d : drop) d = uniform01(rng) < p_f ? 1 : 0;
  SparseMatrix out = x;
  out.prune([&](Index, Index col, Real) { return drop[col] == 0; });
  return out;
}

inline Matrix mask_features(const Matrix& x, Real p_f, Rng& rng) {
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw ConfigError("feature mask rate must be in [0,1]");
  Matrix out = x;
  for (Index c = 0; c < x.cols(); ++c) {
    if (uniform01(rng) < p_f) out.col(c).setZero();
  }
  return out;
}

/// Full augmentation: edges from eba_augment, features from mask_features.
inline AugmentedView make_augmented_view(const Graph& g, const Matrix& z, const Matrix& a_pred,
                                         const EBAConfig& cfg, Rng& rng, int epoch = 0) {
  AugmentedView view = eba_augment(g, z, a_pred, cfg, epoch);
  view.graph = view.graph.with_features(mask_features(g.features(), cfg.p_f, rng));
  return view;
}

}  // namespace coeba
