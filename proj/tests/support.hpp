#pragma once

// Shared fixtures and oracles for the test suites.

#include "coeba/coeba.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <string>

namespace coeba::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, Real scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return m;
}

inline EdgeList edges(std::initializer_list<std::pair<NodeId, NodeId>> pairs) {
  EdgeList out;
  for (auto [a, b] : pairs) out.emplace_back(a, b);
  return out;
}

inline Graph path3() { return Graph::structure_only(3, edges({{0, 1}, {1, 2}})); }
inline Graph triangle() { return Graph::structure_only(3, edges({{0, 1}, {1, 2}, {0, 2}})); }

inline Graph complete(NodeId n, Index feature_dim = 0) {
  EdgeList e;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) e.emplace_back(a, b);
  if (feature_dim == 0) return Graph::structure_only(n, e);
  return Graph(n, e, random_matrix(n, feature_dim, 7));
}

inline Graph two_triangles() {
  return Graph::structure_only(6, edges({{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}));
}

/// Six nodes, two loosely joined groups, dense non-negative features.
inline Graph six_node() {
  Matrix x = random_matrix(6, 5, 11).cwiseAbs();
  return Graph(6, edges({{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}}), x);
}

/// A second view of six_node: some edges dropped, one added, one feature
/// column zeroed.
inline Graph six_node_view() {
  Matrix x = Matrix(six_node().features());
  x.col(2).setZero();
  return Graph(6, edges({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 4}}), x);
}

/// Small encoder so finite differences stay cheap.
inline EncoderConfig small_encoder(Backbone b) {
  EncoderConfig c;
  c.backbone = b;
  c.hidden_dim = 6;
  c.out_dim = 3;
  c.dropout = 0.2;
  c.appnp_steps = 4;
  return c;
}

struct GradCheck {
  Real max_rel = 0.0;  // worst per-matrix relative error
  std::string worst;
};

/// Central finite differences on every entry of every parameter matrix.
/// `loss` must be a deterministic function of the parameters. The error of
/// a matrix is ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8).
inline GradCheck check_gradient(const EncoderParams& params, const EncoderParams& analytic,
                                const std::function<Real(const EncoderParams&)>& loss,
                                bool include_logvar, Real h = 1e-6) {
  GradCheck out;
  auto check = [&](Matrix EncoderParams::*member, const char* name) {
    EncoderParams p = params;
    Matrix& w = p.*member;
    Matrix numeric(w.rows(), w.cols());
    for (Index i = 0; i < w.size(); ++i) {
      const Real orig = w.data()[i];
      w.data()[i] = orig + h;
      const Real up = loss(p);
      w.data()[i] = orig - h;
      const Real down = loss(p);
      w.data()[i] = orig;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const Matrix& a = analytic.*member;
    const Real denom = std::max({a.norm(), numeric.norm(), 1e-8});
    const Real rel = (a - numeric).norm() / denom;
    if (rel >= out.max_rel) {
      out.max_rel = rel;
      out.worst = name;
    }
  };
  check(&EncoderParams::w_hidden, "W_hidden");
  check(&EncoderParams::w_mu, "W_mu");
  if (include_logvar) check(&EncoderParams::w_logvar, "W_logvar");
  return out;
}

/// Value and gradient of the joint objective on six_node / six_node_view
/// with fresh randomness from `seed` on every call.
inline GradCheck joint_gradient_check(Backbone b, std::uint64_t seed = 5) {
  const Graph g = six_node();
  const Graph ga = six_node_view();
  const PropagationOperator op = normalized_adjacency(g);
  const PropagationOperator op_a = normalized_adjacency(ga);
  TrainConfig cfg;
  cfg.encoder = small_encoder(b);
  cfg.loss.recon_mode = ReconMode::dense;
  const EncoderParams params = init_params(g.feature_dim(), cfg.encoder, 3);

  auto eval = [&](const EncoderParams& p, bool want_grad) {
    Rng rng(seed);
    return joint_objective(g, op, ga, op_a, p, cfg, rng, want_grad);
  };
  const EncoderParams analytic = eval(params, true).grads;
  return check_gradient(
      params, analytic, [&](const EncoderParams& p) { return eval(p, false).total; },
      is_variational(b));
}

/// Brute-force Hits@K: merge both lists, sort by score descending with
/// negatives ahead of positives on ties, then a positive counts when fewer
/// than k negatives precede it.
inline Real hits_oracle(const std::vector<Real>& pos, const std::vector<Real>& neg, int k) {
  std::vector<std::pair<Real, bool>> all;
  for (Real s : pos) all.emplace_back(s, true);
  for (Real s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return !a.second && b.second;
  });
  int negatives_seen = 0;
  std::size_t hits = 0;
  for (const auto& [score, is_pos] : all) {
    if (is_pos) {
      if (negatives_seen < k) ++hits;
    } else {
      ++negatives_seen;
    }
  }
  return pos.empty() ? 0.0 : static_cast<Real>(hits) / static_cast<Real>(pos.size());
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("coeba_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace coeba::testing
