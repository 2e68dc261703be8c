#pragma once

// Two-layer autoencoder encoders (GAE / GNAE / VGNAE) with APPNP-style
// propagation, the inner-product decoder, and hand-written backward passes.

#include "coeba/common.hpp"
#include "coeba/graph.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace coeba {

enum class Backbone { gae, gnae, vgnae };

inline std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::gae: return "gae";
    case Backbone::gnae: return "gnae";
    case Backbone::vgnae: return "vgnae";
  }
  return "?";
}

inline Backbone parse_backbone(const std::string& s) {
  if (s == "gae") return Backbone::gae;
  if (s == "gnae") return Backbone::gnae;
  if (s == "vgnae") return Backbone::vgnae;
  throw ConfigError("unknown backbone '" + s + "' (expected gae, gnae or vgnae)");
}

inline bool is_normalized(Backbone b) { return b != Backbone::gae; }
inline bool is_variational(Backbone b) { return b == Backbone::vgnae; }

struct EncoderConfig {
  Backbone backbone = Backbone::vgnae;
  Index hidden_dim = 256;
  Index out_dim = 64;
  Real dropout = 0.3;
  int appnp_steps = 10;
  Real appnp_teleport = 0.1;
  Real norm_scale = 1.8;

  void validate() const {
    if (hidden_dim <= 0) throw ConfigError("encoder.hidden_dim must be positive");
    if (out_dim <= 0) throw ConfigError("encoder.out_dim must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder.dropout must be in [0,1)");
    if (appnp_steps < 0) throw ConfigError("encoder.K must be non-negative");
    if (!(appnp_teleport >= 0.0 && appnp_teleport <= 1.0)) {
      throw ConfigError("encoder.beta must be in [0,1]");
    }
    if (!(norm_scale > 0.0)) throw ConfigError("encoder.scale must be positive");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderParams {
  Matrix w_hidden;  // D_f x hidden
  Matrix w_mu;      // hidden x out
  Matrix w_logvar;  // hidden x out; untouched for non-variational backbones

  bool finite() const {
    return w_hidden.allFinite() && w_mu.allFinite() && w_logvar.allFinite();
  }

  void check_shapes(Index feature_dim, const EncoderConfig& cfg) const {
    auto expect = [](const Matrix& m, Index r, Index c, const char* name) {
      if (m.rows() != r || m.cols() != c) {
        throw ShapeError(std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                         std::to_string(c));
      }
    };
    expect(w_hidden, feature_dim, cfg.hidden_dim, "W_hidden");
    expect(w_mu, cfg.hidden_dim, cfg.out_dim, "W_mu");
    expect(w_logvar, cfg.hidden_dim, cfg.out_dim, "W_logvar");
  }

  EncoderParams zeros_like() const {
    return {Matrix::Zero(w_hidden.rows(), w_hidden.cols()),
            Matrix::Zero(w_mu.rows(), w_mu.cols()),
            Matrix::Zero(w_logvar.rows(), w_logvar.cols())};
  }

  EncoderParams& operator+=(const EncoderParams& o) {
    w_hidden += o.w_hidden;
    w_mu += o.w_mu;
    w_logvar += o.w_logvar;
    return *this;
  }

  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    return a.w_hidden == b.w_hidden && a.w_mu == b.w_mu && a.w_logvar == b.w_logvar;
  }
};

/// Glorot-uniform initialization, deterministic in `seed`.
inline EncoderParams init_params(Index feature_dim, const EncoderConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x696e6974));
  auto glorot = [&rng](Index rows, Index cols) {
    const Real bound = std::sqrt(6.0 / static_cast<Real>(rows + cols));
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
    return m;
  };
  EncoderParams p;
  p.w_hidden = glorot(feature_dim, cfg.hidden_dim);
  p.w_mu = glorot(cfg.hidden_dim, cfg.out_dim);
  p.w_logvar = glorot(cfg.hidden_dim, cfg.out_dim);
  return p;
}

struct LatentState {
  Matrix mu;
  Matrix logvar;
  Matrix z;
};

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// H(k+1) = (1 - beta) * A_hat * H(k) + beta * H(0), returning H(K).
///
/// The map is a polynomial in the symmetric A_hat, hence self-adjoint: the
/// same call back-propagates a gradient.
inline Matrix propagate(const Matrix& h, const PropagationOperator& op, int steps, Real teleport) {
  if (op.matrix.cols() != h.rows()) {
    throw ShapeError("propagate: operator is " + std::to_string(op.matrix.rows()) + "x" +
                     std::to_string(op.matrix.cols()) + " but input has " +
                     std::to_string(h.rows()) + " rows");
  }
  Matrix cur = h;
  Matrix next(h.rows(), h.cols());
  for (int k = 0; k < steps; ++k) {
    next.noalias() = op.matrix * cur;
    next *= (1.0 - teleport);
    next += teleport * h;
    cur.swap(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Reparameterization and decoding
// ---------------------------------------------------------------------------

inline constexpr Real kLogvarMin = -10.0;
inline constexpr Real kLogvarMax = 10.0;

/// z = mu + exp(logvar / 2) * eps, eps ~ N(0, I) drawn row-major from rng.
/// Writes the noise to `eps_out` when given. logvar is not clamped here.
inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng,
                             Matrix* eps_out = nullptr) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) {
    throw ShapeError("reparameterize: mu and logvar shapes differ");
  }
  Matrix eps(mu.rows(), mu.cols());
  for (Index i = 0; i < eps.size(); ++i) eps.data()[i] = standard_normal(rng);
  Matrix z = mu.array() + (0.5 * logvar.array()).exp() * eps.array();
  if (eps_out) *eps_out = std::move(eps);
  return z;
}

inline Real sigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

/// Full N x N matrix sigmoid(Z Z^T).
inline Matrix decode(const Matrix& z) {
  Matrix s = z * z.transpose();
  return s.unaryExpr([](Real x) { return sigmoid(x); });
}

/// sigmoid(z_i . z_j) for each listed pair.
inline std::vector<Real> decode(const Matrix& z, const EdgeList& pairs) {
  std::vector<Real> out;
  out.reserve(pairs.size());
  for (const Edge& e : pairs) {
    if (e.u < 0 || e.v >= z.rows()) throw RangeError("decode: pair id out of range");
    out.push_back(sigmoid(z.row(e.u).dot(z.row(e.v))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoder forward / backward
// ---------------------------------------------------------------------------

/// Intermediate values from a forward pass, kept for the backward pass.
struct EncoderTrace {
  Matrix pre_hidden;   // X W_hidden
  Matrix hidden;       // relu + dropout
  Matrix keep_scale;   // dropout multiplier per hidden entry (0 or 1/(1-p)); empty if none
  Matrix raw_mu;       // propagate(hidden W_mu)
  Vector raw_norm;     // row norms of raw_mu (normalized backbones)
  Matrix raw_logvar;   // propagate(hidden W_logvar) before clamping
  Matrix eps;          // reparameterization noise; empty when z = mu
  LatentState latent;
};

inline void check_encoder_inputs(const SparseMatrix& x, const PropagationOperator& op,
                                 const EncoderParams& params, const EncoderConfig& cfg) {
  params.check_shapes(x.cols(), cfg);
  if (op.matrix.rows() != x.rows()) {
    throw ShapeError("encode: operator size " + std::to_string(op.matrix.rows()) +
                     " differs from feature rows " + std::to_string(x.rows()));
  }
  if (!params.finite()) throw NumericError("encode: non-finite parameter values");
}

/// Forward pass. `rng` supplies dropout masks and reparameterization noise;
/// it is only consumed when `training` is set.
inline EncoderTrace encode_traced(const SparseMatrix& x, const PropagationOperator& op,
                                  const EncoderParams& params, const EncoderConfig& cfg,
                                  bool training, Rng& rng) {
  check_encoder_inputs(x, op, params, cfg);
  EncoderTrace t;
  t.pre_hidden = x * params.w_hidden;
  t.hidden = t.pre_hidden.cwiseMax(0.0);
  if (training && cfg.dropout > 0.0) {
    const Real scale = 1.0 / (1.0 - cfg.dropout);
    t.keep_scale.resize(t.hidden.rows(), t.hidden.cols());
    for (Index i = 0; i < t.keep_scale.size(); ++i) {
      t.keep_scale.data()[i] = uniform01(rng) < cfg.dropout ? 0.0 : scale;
    }
    t.hidden.array() *= t.keep_scale.array();
  }

  t.raw_mu = propagate(t.hidden * params.w_mu, op, cfg.appnp_steps, cfg.appnp_teleport);
  LatentState& out = t.latent;
  if (is_normalized(cfg.backbone)) {
    t.raw_norm = t.raw_mu.rowwise().norm();
    out.mu.resize(t.raw_mu.rows(), t.raw_mu.cols());
    for (Index i = 0; i < t.raw_mu.rows(); ++i) {
      const Real n = t.raw_norm(i);
      if (n > 0.0) out.mu.row(i) = (cfg.norm_scale / n) * t.raw_mu.row(i);
      else out.mu.row(i).setZero();
    }
  } else {
    out.mu = t.raw_mu;
  }

  if (is_variational(cfg.backbone)) {
    t.raw_logvar = propagate(t.hidden * params.w_logvar, op, cfg.appnp_steps, cfg.appnp_teleport);
    out.logvar = t.raw_logvar.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
    if (training) out.z = reparameterize(out.mu, out.logvar, rng, &t.eps);
    else out.z = out.mu;
  } else {
    out.logvar = Matrix::Zero(out.mu.rows(), out.mu.cols());
    out.z = out.mu;
  }
  if (!out.z.allFinite()) throw NumericError("encode: non-finite embeddings");
  return t;
}

inline LatentState encode(const SparseMatrix& x, const PropagationOperator& op,
                          const EncoderParams& params, const EncoderConfig& cfg, bool training,
                          Rng& rng) {
  return encode_traced(x, op, params, cfg, training, rng).latent;
}

/// Gradients flowing into an encoder's outputs.
struct LatentGrad {
  Matrix z;       // dL/dz
  Matrix mu;      // direct dL/dmu (KL); may be empty
  Matrix logvar;  // direct dL/dlogvar (KL); may be empty
};

/// Back-propagates output gradients to parameter gradients.
inline EncoderParams encode_backward(const SparseMatrix& x, const PropagationOperator& op,
                                     const EncoderParams& params, const EncoderConfig& cfg,
                                     const EncoderTrace& t, const LatentGrad& g) {
  const LatentState& out = t.latent;
  Matrix d_mu = g.z;
  if (g.mu.size() > 0) d_mu += g.mu;

  EncoderParams grads = params.zeros_like();
  Matrix d_hidden(t.hidden.rows(), t.hidden.cols());

  if (is_variational(cfg.backbone)) {
    Matrix d_logvar = Matrix::Zero(out.logvar.rows(), out.logvar.cols());
    if (t.eps.size() > 0) {
      d_logvar.array() = g.z.array() * t.eps.array() * 0.5 * (0.5 * out.logvar.array()).exp();
    }
    if (g.logvar.size() > 0) d_logvar += g.logvar;
    // Clamp passes gradient only inside the interval.
    for (Index i = 0; i < d_logvar.size(); ++i) {
      const Real r = t.raw_logvar.data()[i];
      if (r < kLogvarMin || r > kLogvarMax) d_logvar.data()[i] = 0.0;
    }
    const Matrix d_lv_pre = propagate(d_logvar, op, cfg.appnp_steps, cfg.appnp_teleport);
    grads.w_logvar.noalias() = t.hidden.transpose() * d_lv_pre;
    d_hidden.noalias() = d_lv_pre * params.w_logvar.transpose();
  } else {
    d_hidden.setZero();
  }

  Matrix d_raw;
  if (is_normalized(cfg.backbone)) {
    d_raw.resize(d_mu.rows(), d_mu.cols());
    for (Index i = 0; i < d_mu.rows(); ++i) {
      const Real n = t.raw_norm(i);
      if (n <= 0.0) {
        d_raw.row(i).setZero();
        continue;
      }
      const auto u = t.raw_mu.row(i) / n;
      const Real proj = u.dot(d_mu.row(i));
      d_raw.row(i) = (cfg.norm_scale / n) * (d_mu.row(i) - proj * u);
    }
  } else {
    d_raw = std::move(d_mu);
  }
  const Matrix d_mu_pre = propagate(d_raw, op, cfg.appnp_steps, cfg.appnp_teleport);
  grads.w_mu.noalias() = t.hidden.transpose() * d_mu_pre;
  d_hidden.noalias() += d_mu_pre * params.w_mu.transpose();

  if (t.keep_scale.size() > 0) d_hidden.array() *= t.keep_scale.array();
  for (Index i = 0; i < d_hidden.size(); ++i) {
    if (t.pre_hidden.data()[i] <= 0.0) d_hidden.data()[i] = 0.0;
  }
  grads.w_hidden = Matrix(x.transpose() * d_hidden);
  return grads;
}

}  // namespace coeba
