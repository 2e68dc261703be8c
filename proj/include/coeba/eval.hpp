#pragma once

// Hits@K and latent-space diagnostics: pairwise distance populations,
// k-means clustering with per-cluster edge density and modularity, and the
// Pearson correlation used for degree/accuracy studies.

#include "coeba/common.hpp"
#include "coeba/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>

namespace coeba {

/// Fraction of positive scores strictly greater than the k-th highest
/// negative score. Ties lose.
inline Real hits_at_k(std::span<const Real> pos, std::span<const Real> neg, int k) {
  if (k < 1) throw MetricError("hits@k: k must be at least 1");
  if (neg.size() < static_cast<std::size_t>(k)) {
    throw MetricError("hits@k: need at least " + std::to_string(k) + " negatives, got " +
                      std::to_string(neg.size()));
  }
  if (pos.empty()) return 0.0;
  std::vector<Real> sorted(neg.begin(), neg.end());
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
  const Real threshold = sorted[static_cast<std::size_t>(k - 1)];
  const auto hits = std::count_if(pos.begin(), pos.end(), [&](Real s) { return s > threshold; });
  return static_cast<Real>(hits) / static_cast<Real>(pos.size());
}

struct MeanStd {
  Real mean = 0.0;
  Real std = 0.0;  // sample standard deviation; 0 for fewer than two values
};

inline MeanStd mean_std(std::span<const Real> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<Real>(xs.size());
  if (xs.size() < 2) return r;
  Real ss = 0.0;
  for (Real x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<Real>(xs.size() - 1));
  return r;
}

inline Real median(std::vector<Real> xs) {
  if (xs.empty()) return 0.0;
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const Real hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  const Real lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Distance populations
// ---------------------------------------------------------------------------

struct DistanceStats {
  Real connected_mean = 0.0;
  Real connected_median = 0.0;
  Real unconnected_mean = 0.0;
  Real unconnected_median = 0.0;
  std::vector<Real> connected;    // raw distances, for histograms
  std::vector<Real> unconnected;
};

/// Candidate non-edge counts above this are sampled instead of enumerated.
inline constexpr std::uint64_t kEnumerateNonEdgesLimit = 1'000'000;

/// Euclidean distances over connected pairs (capped at `sample`, 0 = all)
/// and an equal-size uniform sample of unconnected pairs.
inline DistanceStats distance_diagnostic(const Matrix& z, const Graph& g, std::size_t sample,
                                         std::uint64_t seed) {
  if (z.rows() != g.n_nodes()) throw ShapeError("distance_diagnostic: embedding rows != nodes");
  Rng rng(derive_seed(seed, 0x64697374));
  EdgeList connected = g.edges();
  if (sample > 0 && connected.size() > sample) {
    shuffle(connected, rng);
    connected.resize(sample);
  }
  const std::uint64_t n = static_cast<std::uint64_t>(g.n_nodes());
  const std::uint64_t non_edges = (n < 2 ? 0 : n * (n - 1) / 2) - g.n_edges();
  const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(connected.size(), non_edges));

  EdgeList unconnected;
  if (want > 0 && non_edges <= kEnumerateNonEdgesLimit) {
    for (NodeId a = 0; a < g.n_nodes(); ++a) {
      for (NodeId b = a + 1; b < g.n_nodes(); ++b) {
        if (!g.has_edge(a, b)) unconnected.emplace_back(a, b);
      }
    }
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + uniform_index(rng, unconnected.size() - i);
      std::swap(unconnected[i], unconnected[j]);
    }
    unconnected.resize(want);
  } else if (want > 0) {
    unconnected = sample_negatives(g, want, rng());
  }

  auto distances = [&z](const EdgeList& pairs) {
    std::vector<Real> d;
    d.reserve(pairs.size());
    for (const Edge& e : pairs) d.push_back((z.row(e.u) - z.row(e.v)).norm());
    return d;
  };
  DistanceStats s;
  s.connected = distances(connected);
  s.unconnected = distances(unconnected);
  s.connected_mean = mean_std(s.connected).mean;
  s.unconnected_mean = mean_std(s.unconnected).mean;
  s.connected_median = median(s.connected);
  s.unconnected_median = median(s.unconnected);
  return s;
}

/// Equal-width histogram as (bin center, count) rows over [lo, hi].
inline std::vector<std::pair<Real, std::size_t>> histogram(std::span<const Real> xs, Real lo,
                                                           Real hi, int bins) {
  std::vector<std::pair<Real, std::size_t>> out(static_cast<std::size_t>(bins));
  const Real width = bins > 0 && hi > lo ? (hi - lo) / bins : 1.0;
  for (int b = 0; b < bins; ++b) out[b] = {lo + (b + 0.5) * width, 0};
  for (Real x : xs) {
    int b = static_cast<int>((x - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++out[b].second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;
  Real objective = 0.0;  // sum of squared distances to assigned centroid
  int best_restart = -1;
  std::vector<std::vector<Real>> traces;  // per restart; empty for failed restarts
};

namespace detail {

inline Real squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

inline Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
  const Index n = x.rows();
  Matrix c(k, x.cols());
  c.row(0) = x.row(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  std::vector<Real> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[i] = squared_distance(x, i, c, 0);
  for (int j = 1; j < k; ++j) {
    const Real total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Index pick = 0;
    if (total > 0.0) {
      Real r = uniform01(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    }
    c.row(j) = x.row(pick);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x, i, c, j));
  }
  return c;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the lowest-objective restart
/// wins, ties to the earlier restart. A restart that ends with an empty
/// cluster is discarded; ConfigError if every restart fails.
inline KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, int restarts = 20,
                           int max_iter = 300) {
  const Index n = x.rows();
  if (k < 2) throw ConfigError("k-means: k must be at least 2");
  if (n < k) throw ConfigError("k-means: k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));
  KMeansResult best;
  best.objective = std::numeric_limits<Real>::infinity();
  best.traces.resize(static_cast<std::size_t>(restarts));

  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Matrix c = detail::kmeanspp_seed(x, k, rng);
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    std::vector<Real> trace;
    bool failed = false;
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (Index i = 0; i < n; ++i) {
        int arg = 0;
        Real bestd = detail::squared_distance(x, i, c, 0);
        for (int j = 1; j < k; ++j) {
          const Real d = detail::squared_distance(x, i, c, j);
          if (d < bestd) {
            bestd = d;
            arg = j;
          }
        }
        if (labels[i] != arg) {
          labels[i] = arg;
          changed = true;
        }
      }
      if (!changed && it > 0) break;
      Matrix sums = Matrix::Zero(k, x.cols());
      std::vector<Index> counts(static_cast<std::size_t>(k), 0);
      for (Index i = 0; i < n; ++i) {
        sums.row(labels[i]) += x.row(i);
        ++counts[labels[i]];
      }
      if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
        failed = true;
        break;
      }
      for (int j = 0; j < k; ++j) c.row(j) = sums.row(j) / static_cast<Real>(counts[j]);
      Real obj = 0.0;
      for (Index i = 0; i < n; ++i) obj += detail::squared_distance(x, i, c, labels[i]);
      trace.push_back(obj);
    }
    if (failed || trace.empty()) continue;
    best.traces[r] = trace;
    if (trace.back() < best.objective) {
      best.objective = trace.back();
      best.labels = labels;
      best.centroids = c;
      best.best_restart = r;
    }
  }
  if (best.best_restart < 0) {
    throw ConfigError("k-means: every restart produced an empty cluster");
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cluster structure
// ---------------------------------------------------------------------------

/// Newman modularity Q = sum_c (e_c / m - (deg_c / 2m)^2).
inline Real modularity(const Graph& g, std::span<const int> labels) {
  if (static_cast<NodeId>(labels.size()) != g.n_nodes()) {
    throw ShapeError("modularity: label count differs from node count");
  }
  const Real m = static_cast<Real>(g.n_edges());
  if (m == 0) return 0.0;
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<Real> within(static_cast<std::size_t>(k), 0.0), deg(static_cast<std::size_t>(k), 0.0);
  for (const Edge& e : g.edges()) {
    if (labels[e.u] == labels[e.v]) within[labels[e.u]] += 1.0;
  }
  for (NodeId v = 0; v < g.n_nodes(); ++v) deg[labels[v]] += static_cast<Real>(g.degree(v));
  Real q = 0.0;
  for (int c = 0; c < k; ++c) {
    const Real frac = deg[c] / (2.0 * m);
    q += within[c] / m - frac * frac;
  }
  return q;
}

inline Real edge_density(std::size_t edges, std::size_t nodes) {
  if (nodes < 2) return 0.0;
  return static_cast<Real>(edges) / (0.5 * static_cast<Real>(nodes) * static_cast<Real>(nodes - 1));
}

struct ClusterStats {
  std::vector<Real> densities;     // in-cluster edge density, per cluster
  std::vector<std::size_t> sizes;  // nodes per cluster
  Real graph_density = 0.0;
  Real modularity = 0.0;
  std::vector<int> labels;
};

inline ClusterStats cluster_stats_for(const Graph& g, std::vector<int> labels, int k) {
  ClusterStats s;
  s.sizes.assign(static_cast<std::size_t>(k), 0);
  std::vector<std::size_t> within(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++s.sizes[l];
  for (const Edge& e : g.edges()) {
    if (labels[e.u] == labels[e.v]) ++within[labels[e.u]];
  }
  for (int c = 0; c < k; ++c) s.densities.push_back(edge_density(within[c], s.sizes[c]));
  s.graph_density = edge_density(g.n_edges(), static_cast<std::size_t>(g.n_nodes()));
  s.modularity = modularity(g, labels);
  s.labels = std::move(labels);
  return s;
}

/// k-means on the embeddings, then edge density per cluster and modularity
/// of the induced partition of `g`.
inline ClusterStats cluster_diagnostic(const Matrix& z, const Graph& g, int k, std::uint64_t seed) {
  if (z.rows() != g.n_nodes()) throw ShapeError("cluster_diagnostic: embedding rows != nodes");
  KMeansResult km = kmeans(z, k, seed);
  return cluster_stats_for(g, std::move(km.labels), k);
}

/// Sample Pearson correlation coefficient.
inline Real pearson(std::span<const Real> xs, std::span<const Real> ys) {
  if (xs.size() != ys.size()) throw MetricError("pearson: length mismatch");
  if (xs.size() < 2) throw MetricError("pearson: need at least two points");
  const Real mx = mean_std(xs).mean, my = mean_std(ys).mean;
  Real sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw MetricError("pearson: correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EvalReport {
  std::map<int, MeanStd> hits_at_k;
  std::vector<Real> per_split_scores;  // Hits@K for the primary K, one per split
  std::int64_t min_degree_original = 0;
  std::int64_t min_degree_augmented = 0;
  std::optional<DistanceStats> distance_stats;
  std::optional<ClusterStats> cluster_stats;
  std::optional<Real> degree_hits_correlation;
};

}  // namespace coeba
