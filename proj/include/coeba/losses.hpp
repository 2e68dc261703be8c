#pragma once

// Reconstruction loss, the neighbor-concentrated contrastive losses and the
// combined objective. Every loss has a value-only form and a `_grad` form
// returning gradients with respect to its embedding inputs.

#include "coeba/common.hpp"
#include "coeba/graph.hpp"
#include "coeba/model.hpp"

#include <array>
#include <cmath>
#include <string>

namespace coeba {

enum class ReconMode { automatic, dense, sampled };

inline std::string to_string(ReconMode m) {
  switch (m) {
    case ReconMode::automatic: return "auto";
    case ReconMode::dense: return "dense";
    case ReconMode::sampled: return "sampled";
  }
  return "?";
}

inline ReconMode parse_recon_mode(const std::string& s) {
  if (s == "auto") return ReconMode::automatic;
  if (s == "dense") return ReconMode::dense;
  if (s == "sampled") return ReconMode::sampled;
  throw ConfigError("unknown loss.recon_mode '" + s + "' (expected auto, dense or sampled)");
}

/// Graphs above this size use sampled reconstruction in automatic mode.
inline constexpr NodeId kDenseReconMaxNodes = 20000;

struct LossConfig {
  Real lambda1 = 3.0;
  Real lambda2 = 1.0;
  Real lambda3 = 3.0;
  Real btn_weight = 1.0;  // 0 removes the between-view term
  Real tau = 0.5;
  ReconMode recon_mode = ReconMode::automatic;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("loss.tau must be positive");
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || btn_weight < 0) {
      throw ConfigError("loss weights must be non-negative");
    }
  }

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

inline constexpr Real kProbClip = 1e-7;

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

struct ReconResult {
  Real value = 0.0;
  Real bce = 0.0;
  Real kl = 0.0;
  LatentGrad grad;  // filled only by recon_loss_grad
};

namespace detail {

/// -log(clip(p)) and its derivative w.r.t. the logit; the derivative is zero
/// where clipping is active.
struct BceTerm {
  Real loss;
  Real dlogit;
};

inline BceTerm bce_positive(Real logit) {
  const Real p = sigmoid(logit);
  if (p < kProbClip) return {-std::log(kProbClip), 0.0};
  if (p > 1.0 - kProbClip) return {-std::log(1.0 - kProbClip), 0.0};
  return {-std::log(p), p - 1.0};
}

inline BceTerm bce_negative(Real logit) {
  const Real p = sigmoid(logit);
  if (p < kProbClip) return {-std::log(1.0 - kProbClip), 0.0};
  if (p > 1.0 - kProbClip) return {-std::log(kProbClip), 0.0};
  return {-std::log(1.0 - p), p};
}

inline bool use_dense(const Graph& g, ReconMode mode) {
  if (mode == ReconMode::dense) return true;
  if (mode == ReconMode::sampled) return false;
  return g.n_nodes() <= kDenseReconMaxNodes;
}

/// Class-balanced BCE over all N^2 entries with targets A + I: half weight
/// on the mean over positive entries, half on the mean over negatives.
/// Equivalent to positive reweighting by #non-edges/#edges.
inline Real dense_bce(const Graph& g, const Matrix& z, Matrix* dz) {
  const Index n = z.rows();
  const Matrix s = z * z.transpose();
  const Real n_pos = static_cast<Real>(n) + 2.0 * static_cast<Real>(g.n_edges());
  const Real n_neg = static_cast<Real>(n) * static_cast<Real>(n) - n_pos;
  const Real w_pos = n_neg > 0 ? 0.5 / n_pos : 1.0 / n_pos;
  const Real w_neg = n_neg > 0 ? 0.5 / n_neg : 0.0;

  Matrix grad;
  if (dz) grad.resize(n, n);
  Real total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const auto t = bce_negative(s(i, j));
      total += w_neg * t.loss;
      if (dz) grad(i, j) = w_neg * t.dlogit;
    }
  }
  auto set_positive = [&](Index i, Index j) {
    const auto neg = bce_negative(s(i, j));
    const auto pos = bce_positive(s(i, j));
    total += w_pos * pos.loss - w_neg * neg.loss;
    if (dz) grad(i, j) = w_pos * pos.dlogit;
  };
  for (Index i = 0; i < n; ++i) set_positive(i, i);
  for (const Edge& e : g.edges()) {
    set_positive(e.u, e.v);
    set_positive(e.v, e.u);
  }
  if (dz) *dz = 2.0 * grad * z;  // grad is symmetric
  return total;
}

/// Train positives plus an equal number of fresh uniform negatives.
inline Real sampled_bce(const Graph& g, const Matrix& z, Rng& rng, Matrix* dz) {
  const EdgeList& pos = g.edges();
  if (pos.empty()) return 0.0;
  const EdgeList neg = sample_negatives(g, pos.size(), rng());
  if (dz) dz->setZero(z.rows(), z.cols());
  auto accumulate = [&](const EdgeList& pairs, bool positive) {
    const Real w = 0.5 / static_cast<Real>(pairs.size());
    Real sum = 0.0;
    for (const Edge& e : pairs) {
      const Real logit = z.row(e.u).dot(z.row(e.v));
      const auto t = positive ? bce_positive(logit) : bce_negative(logit);
      sum += w * t.loss;
      if (dz && t.dlogit != 0.0) {
        dz->row(e.u) += (w * t.dlogit) * z.row(e.v);
        dz->row(e.v) += (w * t.dlogit) * z.row(e.u);
      }
    }
    return sum;
  };
  return accumulate(pos, true) + accumulate(neg, false);
}

inline ReconResult recon_impl(const Graph& g, const LatentState& latent, const LossConfig& cfg,
                              bool variational, Rng* rng, bool want_grad) {
  if (latent.z.rows() != g.n_nodes()) {
    throw ShapeError("recon_loss: embeddings have " + std::to_string(latent.z.rows()) +
                     " rows for a graph with " + std::to_string(g.n_nodes()) + " nodes");
  }
  ReconResult r;
  Matrix dz;
  if (use_dense(g, cfg.recon_mode)) {
    r.bce = dense_bce(g, latent.z, want_grad ? &dz : nullptr);
  } else {
    if (!rng) throw ConfigError("sampled reconstruction requires a random source");
    r.bce = sampled_bce(g, latent.z, *rng, want_grad ? &dz : nullptr);
  }
  if (variational && latent.mu.rows() > 0) {
    const Real inv_n = 1.0 / static_cast<Real>(latent.mu.rows());
    const auto lv = latent.logvar.array();
    const auto mu = latent.mu.array();
    r.kl = -0.5 * inv_n * (1.0 + lv - mu.square() - lv.exp()).sum();
    if (want_grad) {
      r.grad.mu = inv_n * latent.mu;
      r.grad.logvar = (0.5 * inv_n) * (lv.exp() - 1.0).matrix();
    }
  }
  r.value = r.bce + r.kl;
  if (!std::isfinite(r.value)) throw NumericError("recon_loss: non-finite value");
  if (want_grad) r.grad.z = std::move(dz);
  return r;
}

}  // namespace detail

/// Negative variational lower bound: balanced BCE of sigmoid(Z Z^T) against
/// A + I, plus KL(q || N(0, I)) averaged over nodes when `variational`.
inline ReconResult recon_loss(const Graph& g, const LatentState& latent, const LossConfig& cfg,
                              bool variational, Rng* rng = nullptr) {
  return detail::recon_impl(g, latent, cfg, variational, rng, false);
}

inline ReconResult recon_loss_grad(const Graph& g, const LatentState& latent,
                                   const LossConfig& cfg, bool variational, Rng* rng = nullptr) {
  return detail::recon_impl(g, latent, cfg, variational, rng, true);
}

// ---------------------------------------------------------------------------
// Contrastive losses
// ---------------------------------------------------------------------------

struct ContrastResult {
  Real value = 0.0;
  Matrix d_anchor;  // dL / d anchor embeddings
  Matrix d_target;  // dL / d target embeddings
};

namespace detail {

struct RowNormalized {
  Matrix unit;
  Vector norm;
};

inline RowNormalized normalize_rows(const Matrix& z) {
  RowNormalized r{Matrix(z.rows(), z.cols()), z.rowwise().norm()};
  for (Index i = 0; i < z.rows(); ++i) {
    if (r.norm(i) > 0.0) r.unit.row(i) = z.row(i) / r.norm(i);
    else r.unit.row(i).setZero();
  }
  return r;
}

inline Matrix normalize_rows_backward(const RowNormalized& n, const Matrix& d_unit) {
  Matrix d(d_unit.rows(), d_unit.cols());
  for (Index i = 0; i < d.rows(); ++i) {
    if (n.norm(i) <= 0.0) {
      d.row(i).setZero();
      continue;
    }
    const Real proj = n.unit.row(i).dot(d_unit.row(i));
    d.row(i) = (d_unit.row(i) - proj * n.unit.row(i)) / n.norm(i);
  }
  return d;
}

/// Mean over anchors i of
///   -log( sum_{j in {i} u N(i)} e^{sim_ij/tau} / sum_j e^{sim_ij/tau} )
/// with cosine similarity between anchor row i and target row j.
/// `positives` == nullptr means the positive set is {i} alone.
inline ContrastResult contrast(const Matrix& anchor, const Matrix& target, const Graph* positives,
                               Real tau, bool want_grad) {
  if (anchor.rows() != target.rows() || anchor.cols() != target.cols()) {
    throw ShapeError("contrastive loss: view shapes differ");
  }
  if (positives && positives->n_nodes() != anchor.rows()) {
    throw ShapeError("contrastive loss: positive graph has " +
                     std::to_string(positives->n_nodes()) + " nodes, embeddings have " +
                     std::to_string(anchor.rows()) + " rows");
  }
  if (!(tau > 0.0)) throw ConfigError("contrastive loss: tau must be positive");
  const Index n = anchor.rows();
  ContrastResult out;
  if (n == 0) return out;

  const RowNormalized a = normalize_rows(anchor);
  const RowNormalized b = normalize_rows(target);
  Matrix s = (a.unit * b.unit.transpose()) / tau;
  const Real inv_n = 1.0 / static_cast<Real>(n);

  Real total = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto row = s.row(i);
    const Real m = row.maxCoeff();
    row.array() = (row.array() - m).exp();  // row now holds shifted exponentials
    const Real denom = row.sum();
    Real num = row(i);
    if (positives) {
      for (NodeId j : positives->neighbors(i)) num += row(j);
    }
    total += std::log(denom) - std::log(num);
    if (want_grad) {
      // d loss_i / d s_ij = e_ij / denom - [j in P_i] e_ij / num
      const Real pos_ratio = 1.0 - denom / num;
      row(i) *= pos_ratio;
      if (positives) {
        for (NodeId j : positives->neighbors(i)) row(j) *= pos_ratio;
      }
      row *= inv_n / denom;
    }
  }
  out.value = total * inv_n;
  if (want_grad) {
    // s holds dL/dS; S = A B^T / tau.
    const Matrix d_a_unit = (s * b.unit) / tau;
    const Matrix d_b_unit = (s.transpose() * a.unit) / tau;
    out.d_anchor = normalize_rows_backward(a, d_a_unit);
    out.d_target = normalize_rows_backward(b, d_b_unit);
  }
  return out;
}

}  // namespace detail

/// Within-view loss on the augmented embeddings; the only positive of a
/// node is itself.
inline Real within_cl_aug(const Matrix& z_aug, const LossConfig& cfg) {
  return detail::contrast(z_aug, z_aug, nullptr, cfg.tau, false).value;
}

/// Within-view loss on the original embeddings; positives are the node and
/// its neighbors in `g` (the training adjacency).
inline Real within_cl_ori(const Matrix& z, const Graph& g, const LossConfig& cfg) {
  return detail::contrast(z, z, &g, cfg.tau, false).value;
}

/// Between-view loss: anchors from the original view, targets from the
/// augmented view, positives are the node and its augmented-graph neighbors.
inline Real btn_cl(const Matrix& z, const Matrix& z_aug, const Graph& g_aug,
                   const LossConfig& cfg) {
  return detail::contrast(z, z_aug, &g_aug, cfg.tau, false).value;
}

/// Gradient forms. For the within-view losses anchor and target are the
/// same matrix, so the returned `d_anchor` already includes both paths and
/// `d_target` is empty.
inline ContrastResult within_cl_aug_grad(const Matrix& z_aug, const LossConfig& cfg) {
  auto r = detail::contrast(z_aug, z_aug, nullptr, cfg.tau, true);
  r.d_anchor += r.d_target;
  r.d_target.resize(0, 0);
  return r;
}

inline ContrastResult within_cl_ori_grad(const Matrix& z, const Graph& g, const LossConfig& cfg) {
  auto r = detail::contrast(z, z, &g, cfg.tau, true);
  r.d_anchor += r.d_target;
  r.d_target.resize(0, 0);
  return r;
}

inline ContrastResult btn_cl_grad(const Matrix& z, const Matrix& z_aug, const Graph& g_aug,
                                  const LossConfig& cfg) {
  return detail::contrast(z, z_aug, &g_aug, cfg.tau, true);
}

// ---------------------------------------------------------------------------
// Overall objective
// ---------------------------------------------------------------------------

struct LossComponents {
  Real recon_ori = 0.0;
  Real recon_aug = 0.0;
  Real cnst_ori = 0.0;
  Real cnst_aug = 0.0;
  Real btn = 0.0;
};

/// btn_weight * L_btn + lambda1 (L_recon_ori + L_recon_aug)
///   + lambda2 L_cnst_ori + lambda3 L_cnst_aug
inline Real overall_loss(const LossComponents& c, const LossConfig& cfg) {
  for (Real v : {c.recon_ori, c.recon_aug, c.cnst_ori, c.cnst_aug, c.btn}) {
    if (!std::isfinite(v)) throw NumericError("overall_loss: non-finite component");
  }
  return cfg.btn_weight * c.btn + cfg.lambda1 * (c.recon_ori + c.recon_aug) +
         cfg.lambda2 * c.cnst_ori + cfg.lambda3 * c.cnst_aug;
}

}  // namespace coeba
