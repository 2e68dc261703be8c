#pragma once

// Training loop: warm-up on the original graph, periodic re-augmentation,
// joint optimization of reconstruction and contrastive terms with Adam, and
// multi-split experiment orchestration.

#include "coeba/common.hpp"
#include "coeba/eba.hpp"
#include "coeba/eval.hpp"
#include "coeba/graph.hpp"
#include "coeba/losses.hpp"
#include "coeba/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace coeba {

struct TrainConfig {
  Real learning_rate = 0.001;
  Real weight_decay = 5e-4;
  bool decoupled_decay = false;  // true: AdamW-style decay instead of L2 in the gradient
  int epochs = 1000;
  std::uint64_t seed = 0;
  int num_splits = 10;
  int early_stop_patience = 0;  // evaluations without improvement; 0 disables
  int eval_every = 10;
  int eval_k = 10;
  bool warmup_contrastive = true;  // false: reconstruction-only warm-up
  bool single_view = false;        // plain autoencoder: no second view at all
  SplitRatios ratios;
  EBAConfig eba;
  LossConfig loss;
  EncoderConfig encoder;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
    if (epochs <= eba.warmup_epochs) throw ConfigError("train.epochs must exceed eba.warmup_epochs");
    if (num_splits < 1) throw ConfigError("train.num_splits must be at least 1");
    if (eval_every < 1) throw ConfigError("train.eval_every must be at least 1");
    if (eval_k < 1) throw ConfigError("eval.k must be at least 1");
    if (early_stop_patience < 0) throw ConfigError("train.early_stop_patience must be non-negative");
    eba.validate();
    loss.validate();
    encoder.validate();
  }
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

class Adam {
 public:
  Adam(Real lr, Real weight_decay, bool decoupled) : lr_(lr), wd_(weight_decay), decoupled_(decoupled) {}

  /// One update. `update_logvar` is false for backbones that never read
  /// W_logvar, which is then left untouched.
  void step(EncoderParams& p, EncoderParams g, bool update_logvar) {
    if (m_.w_hidden.size() == 0) {
      m_ = p.zeros_like();
      v_ = p.zeros_like();
    }
    ++t_;
    const Real bc1 = 1.0 - std::pow(kBeta1, t_);
    const Real bc2 = 1.0 - std::pow(kBeta2, t_);
    auto apply = [&](Matrix& w, Matrix& grad, Matrix& m, Matrix& v) {
      if (!decoupled_ && wd_ > 0.0) grad += wd_ * w;
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseAbs2();
      if (decoupled_ && wd_ > 0.0) w *= (1.0 - lr_ * wd_);
      w.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kEps);
    };
    apply(p.w_hidden, g.w_hidden, m_.w_hidden, v_.w_hidden);
    apply(p.w_mu, g.w_mu, m_.w_mu, v_.w_mu);
    if (update_logvar) apply(p.w_logvar, g.w_logvar, m_.w_logvar, v_.w_logvar);
  }

 private:
  static constexpr Real kBeta1 = 0.9;
  static constexpr Real kBeta2 = 0.999;
  static constexpr Real kEps = 1e-8;
  Real lr_;
  Real wd_;
  bool decoupled_;
  int t_ = 0;
  EncoderParams m_, v_;
};

// ---------------------------------------------------------------------------
// Log
// ---------------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  LossComponents components;
  Real total = 0.0;
  std::optional<Real> val_hits;
  bool augmented = false;  // a new view was generated at the start of this epoch
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  Real best_val_hits = -1.0;
  std::string best_checkpoint;  // filled by the caller that writes checkpoints
};

/// Tab-separated, one line per epoch: epoch, recon_ori, recon_aug,
/// cnst_ori, cnst_aug, btn, all, and val_hits when evaluated.
inline void write_train_log(std::ostream& out, const TrainLog& log) {
  out << "# epoch\tL_recon_ori\tL_recon_aug\tL_cnst_ori\tL_cnst_aug\tL_btn\tL_all\tval_hits\n";
  for (const auto& r : log.epochs) {
    const auto& c = r.components;
    out << r.epoch << '\t' << detail::format_real(c.recon_ori) << '\t'
        << detail::format_real(c.recon_aug) << '\t' << detail::format_real(c.cnst_ori) << '\t'
        << detail::format_real(c.cnst_aug) << '\t' << detail::format_real(c.btn) << '\t'
        << detail::format_real(r.total);
    if (r.val_hits) out << '\t' << detail::format_real(*r.val_hits);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

struct TrainInputs {
  const Graph* graph = nullptr;         // training view (train positives only)
  const EdgeList* valid_pos = nullptr;  // optional validation for model selection
  const EdgeList* valid_neg = nullptr;
  const EdgeList* held_out = nullptr;   // edges that must never enter the training view
};

struct TrainResult {
  EncoderParams params;        // selected by best validation Hits@K, else final
  EncoderParams final_params;
  TrainLog log;
  std::optional<AugmentedView> last_view;
};

/// Scores pairs with the deterministic (evaluation-mode) embeddings.
inline Matrix eval_embeddings(const Graph& g, const PropagationOperator& op,
                              const EncoderParams& params, const EncoderConfig& cfg) {
  Rng unused(0);
  return encode(g.features(), op, params, cfg, false, unused).mu;
}

/// Value and parameter gradient of the joint objective for one epoch: both
/// views are encoded in training mode (dropout, reparameterization drawn
/// from `rng`, original view first), zero-weight terms are skipped and
/// reported as 0.
struct JointObjective {
  LossComponents components;
  Real total = 0.0;
  EncoderParams grads;
};

inline JointObjective joint_objective(const Graph& g, const PropagationOperator& op,
                                      const Graph& ga, const PropagationOperator& op_a,
                                      const EncoderParams& params, const TrainConfig& cfg,
                                      Rng& rng, bool want_grad) {
  const LossConfig& lc = cfg.loss;
  const bool variational = is_variational(cfg.encoder.backbone);
  JointObjective out;
  LossComponents& c = out.components;

  const EncoderTrace ori = encode_traced(g.features(), op, params, cfg.encoder, true, rng);
  const EncoderTrace aug = encode_traced(ga.features(), op_a, params, cfg.encoder, true, rng);

  LatentGrad g_ori, g_aug;
  g_ori.z = Matrix::Zero(ori.latent.z.rows(), ori.latent.z.cols());
  g_aug.z = Matrix::Zero(aug.latent.z.rows(), aug.latent.z.cols());

  if (lc.lambda1 > 0.0) {
    const ReconResult r_ori = recon_loss_grad(g, ori.latent, lc, variational, &rng);
    const ReconResult r_aug = recon_loss_grad(ga, aug.latent, lc, variational, &rng);
    c.recon_ori = r_ori.value;
    c.recon_aug = r_aug.value;
    auto add = [&](LatentGrad& dst, const LatentGrad& src) {
      dst.z += lc.lambda1 * src.z;
      if (src.mu.size() > 0) dst.mu = lc.lambda1 * src.mu;
      if (src.logvar.size() > 0) dst.logvar = lc.lambda1 * src.logvar;
    };
    add(g_ori, r_ori.grad);
    add(g_aug, r_aug.grad);
  }
  if (lc.lambda2 > 0.0) {
    const ContrastResult r = within_cl_ori_grad(ori.latent.z, g, lc);
    c.cnst_ori = r.value;
    g_ori.z += lc.lambda2 * r.d_anchor;
  }
  if (lc.lambda3 > 0.0) {
    const ContrastResult r = within_cl_aug_grad(aug.latent.z, lc);
    c.cnst_aug = r.value;
    g_aug.z += lc.lambda3 * r.d_anchor;
  }
  if (lc.btn_weight > 0.0) {
    const ContrastResult r = btn_cl_grad(ori.latent.z, aug.latent.z, ga, lc);
    c.btn = r.value;
    g_ori.z += lc.btn_weight * r.d_anchor;
    g_aug.z += lc.btn_weight * r.d_target;
  }
  out.total = overall_loss(c, lc);
  if (want_grad) {
    out.grads = encode_backward(g.features(), op, params, cfg.encoder, ori, g_ori);
    out.grads += encode_backward(ga.features(), op_a, params, cfg.encoder, aug, g_aug);
  }
  return out;
}

class Trainer {
 public:
  Trainer(TrainInputs in, const TrainConfig& cfg)
      : in_(in),
        cfg_(cfg),
        op_(normalized_adjacency(*in.graph)),
        rng_(derive_seed(cfg.seed, 0x747261696e)),
        params_(init_params(in.graph->features().cols(), cfg.encoder, cfg.seed)),
        adam_(cfg.learning_rate, cfg.weight_decay, cfg.decoupled_decay) {
    if (in.valid_pos && in.valid_neg && !in.valid_pos->empty()) {
      eval_k_ = std::min<int>(cfg.eval_k, static_cast<int>(in.valid_neg->size()));
    }
  }

  const EncoderParams& params() const { return params_; }
  const TrainLog& log() const { return log_; }
  const std::optional<AugmentedView>& view() const { return view_; }

  Matrix embeddings() const { return eval_embeddings(*in_.graph, op_, params_, cfg_.encoder); }

  /// Runs epochs [from, to). Returns false if early stopping triggered.
  bool run(int from, int to) {
    for (int e = from; e < to; ++e) {
      try {
        if (e < cfg_.eba.warmup_epochs || cfg_.single_view) single_view_epoch(e);
        else main_epoch(e);
      } catch (const TrainingError&) {
        throw;
      } catch (const NumericError& err) {
        throw TrainingError(e, err.what());
      }
      if (!maybe_evaluate(e, e + 1 == cfg_.epochs)) return false;
    }
    return true;
  }

  TrainResult finish() {
    TrainResult r;
    r.final_params = params_;
    r.params = best_ ? *best_ : params_;
    r.log = log_;
    r.last_view = view_;
    return r;
  }

 private:
  bool variational() const { return is_variational(cfg_.encoder.backbone); }

  void check_finite(int epoch, Real value) const {
    if (!std::isfinite(value)) throw TrainingError(epoch, "non-finite training loss");
  }

  /// Original graph only. During warm-up the objective is
  /// L_recon_ori + lambda2 L_cnst_ori; a single-view run past warm-up
  /// weights reconstruction by lambda1 as in the joint objective.
  void single_view_epoch(int epoch) {
    const Graph& g = *in_.graph;
    const bool warming = epoch < cfg_.eba.warmup_epochs;
    const Real w_recon = warming ? 1.0 : cfg_.loss.lambda1;
    const bool contrast = (!warming || cfg_.warmup_contrastive) && cfg_.loss.lambda2 > 0.0;
    EncoderTrace tr = encode_traced(g.features(), op_, params_, cfg_.encoder, true, rng_);
    EpochRecord rec;
    rec.epoch = epoch;
    ReconResult recon = recon_loss_grad(g, tr.latent, cfg_.loss, variational(), &rng_);
    rec.components.recon_ori = recon.value;
    LatentGrad grad = std::move(recon.grad);
    if (w_recon != 1.0) {
      grad.z *= w_recon;
      if (grad.mu.size() > 0) grad.mu *= w_recon;
      if (grad.logvar.size() > 0) grad.logvar *= w_recon;
    }
    if (contrast) {
      const ContrastResult c = within_cl_ori_grad(tr.latent.z, g, cfg_.loss);
      rec.components.cnst_ori = c.value;
      grad.z += cfg_.loss.lambda2 * c.d_anchor;
    }
    rec.total = w_recon * rec.components.recon_ori + cfg_.loss.lambda2 * rec.components.cnst_ori;
    check_finite(epoch, rec.total);
    adam_.step(params_, encode_backward(g.features(), op_, params_, cfg_.encoder, tr, grad),
               variational());
    log_.epochs.push_back(rec);
  }

  void refresh_view(int epoch) {
    const Graph& g = *in_.graph;
    if (in_.held_out) {
      for (const Edge& e : *in_.held_out) {
        if (g.has_edge(e.u, e.v)) {
          throw TrainingError(epoch, "held-out edge (" + std::to_string(e.u) + "," +
                                         std::to_string(e.v) + ") present in the training view");
        }
      }
    }
    if (!cfg_.eba.enabled) {
      view_ = AugmentedView{g, epoch, cfg_.eba};
      view_op_ = op_;
      return;
    }
    const Matrix z = embeddings();
    const Matrix a_pred = decode(z);
    view_ = make_augmented_view(g, z, a_pred, cfg_.eba, rng_, epoch);
    view_op_ = normalized_adjacency(view_->graph);
  }

  void main_epoch(int epoch) {
    const Graph& g = *in_.graph;
    EpochRecord rec;
    rec.epoch = epoch;
    if (!view_ || epoch % cfg_.eba.period == 0) {
      refresh_view(epoch);
      rec.augmented = true;
    }
    JointObjective obj = joint_objective(g, op_, view_->graph, view_op_, params_, cfg_, rng_, true);
    rec.components = obj.components;
    rec.total = obj.total;
    check_finite(epoch, rec.total);
    adam_.step(params_, std::move(obj.grads), variational());
    log_.epochs.push_back(rec);
  }

  bool maybe_evaluate(int epoch, bool last) {
    if (eval_k_ == 0) return true;
    if ((epoch + 1) % cfg_.eval_every != 0 && !last) return true;
    const Matrix z = embeddings();
    const auto pos = decode(z, *in_.valid_pos);
    const auto neg = decode(z, *in_.valid_neg);
    const Real h = hits_at_k(pos, neg, eval_k_);
    log_.epochs.back().val_hits = h;
    // Warm-up checkpoints are logged but never selected: on small validation
    // sets they can win outright, which would make every arm the same model.
    if (epoch < cfg_.eba.warmup_epochs) return true;
    if (h > log_.best_val_hits) {
      log_.best_val_hits = h;
      log_.best_epoch = epoch;
      best_ = params_;
      evals_since_best_ = 0;
    } else {
      ++evals_since_best_;
    }
    return cfg_.early_stop_patience == 0 || evals_since_best_ < cfg_.early_stop_patience;
  }

  TrainInputs in_;
  TrainConfig cfg_;
  PropagationOperator op_;
  Rng rng_;
  EncoderParams params_;
  Adam adam_;
  TrainLog log_;
  std::optional<AugmentedView> view_;
  PropagationOperator view_op_;
  std::optional<EncoderParams> best_;
  int eval_k_ = 0;
  int evals_since_best_ = 0;
};

struct WarmupResult {
  EncoderParams params;
  Matrix a_pred;
  TrainLog log;
};

/// Warm-up phase alone: trains on the original graph for
/// cfg.eba.warmup_epochs epochs and returns the predicted matrix of the
/// resulting model.
inline WarmupResult warmup(const Graph& g, const TrainConfig& cfg) {
  Trainer t(TrainInputs{&g}, cfg);
  t.run(0, cfg.eba.warmup_epochs);
  return {t.params(), decode(t.embeddings()), t.log()};
}

/// Full training run: warm-up followed by the augmented main loop.
inline TrainResult train(const TrainInputs& in, const TrainConfig& cfg) {
  cfg.validate();
  Trainer t(in, cfg);
  t.run(0, cfg.epochs);
  return t.finish();
}

inline TrainResult train(const Graph& g, const TrainConfig& cfg) { return train(TrainInputs{&g}, cfg); }

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct SplitOutcome {
  int split = 0;
  EdgeSplit split_edges;
  TrainResult train;
  std::map<int, Real> test_hits;
  Real valid_hits = 0.0;
  std::int64_t min_degree_original = 0;
  std::int64_t min_degree_augmented = 0;
  Matrix embeddings;  // evaluation-mode embeddings of the selected model
};

struct ExperimentOptions {
  int workers = 1;
  int clusters = 5;
  std::size_t distance_sample = 0;  // 0: all connected pairs
  bool diagnostics = true;
  std::vector<int> extra_k = {1, 3, 20, 50, 100};
};

struct ExperimentResult {
  EvalReport report;
  std::vector<SplitOutcome> splits;
};

/// Trains and evaluates one split.
inline SplitOutcome run_split(const Graph& g, const TrainConfig& cfg, int split,
                              const ExperimentOptions& opt) {
  SplitOutcome out;
  out.split = split;
  out.split_edges = split_edges(g, cfg.ratios, static_cast<std::uint64_t>(split));
  const EdgeSplit& s = out.split_edges;
  const Graph train_graph = g.with_edges(s.train_pos);

  TrainConfig run_cfg = cfg;
  run_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(split));
  out.train = train(TrainInputs{&train_graph, &s.valid_pos, &s.valid_neg, &s.test_pos}, run_cfg);

  const PropagationOperator op = normalized_adjacency(train_graph);
  out.embeddings = eval_embeddings(train_graph, op, out.train.params, cfg.encoder);
  const auto pos = decode(out.embeddings, s.test_pos);
  const auto neg = decode(out.embeddings, s.test_neg);
  std::vector<int> ks = opt.extra_k;
  ks.push_back(cfg.eval_k);
  for (int k : ks) {
    if (static_cast<std::size_t>(k) <= neg.size()) out.test_hits[k] = hits_at_k(pos, neg, k);
  }
  if (out.train.log.best_val_hits >= 0) out.valid_hits = out.train.log.best_val_hits;

  out.min_degree_original = degrees(train_graph).min;
  if (cfg.eba.enabled) {
    const Matrix a_pred = decode(out.embeddings);
    out.min_degree_augmented =
        degrees(eba_augment(train_graph, out.embeddings, a_pred, cfg.eba).graph).min;
  } else {
    out.min_degree_augmented = out.min_degree_original;
  }
  return out;
}

/// Repeats run_split over split seeds 0..num_splits-1 and aggregates.
/// Splits may run on several worker threads; results are identical to a
/// serial run.
inline ExperimentResult run_experiment(const Graph& g, const TrainConfig& cfg,
                                       const ExperimentOptions& opt = {}) {
  cfg.validate();
  ExperimentResult res;
  res.splits.resize(static_cast<std::size_t>(cfg.num_splits));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int s = next++; s < cfg.num_splits; s = next++) {
      try {
        res.splits[s] = run_split(g, cfg, s, opt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_workers = std::clamp(opt.workers, 1, cfg.num_splits);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport& rep = res.report;
  std::map<int, std::vector<Real>> by_k;
  for (const auto& s : res.splits) {
    for (const auto& [k, h] : s.test_hits) by_k[k].push_back(h);
  }
  for (auto& [k, xs] : by_k) {
    if (xs.size() == res.splits.size()) rep.hits_at_k[k] = mean_std(xs);
  }
  std::vector<Real> min_deg;
  for (const auto& s : res.splits) {
    auto it = s.test_hits.find(cfg.eval_k);
    rep.per_split_scores.push_back(it == s.test_hits.end() ? 0.0 : it->second);
    min_deg.push_back(static_cast<Real>(s.min_degree_augmented));
  }
  const SplitOutcome& first = res.splits.front();
  rep.min_degree_original = first.min_degree_original;
  rep.min_degree_augmented = first.min_degree_augmented;
  try {
    rep.degree_hits_correlation = pearson(min_deg, rep.per_split_scores);
  } catch (const MetricError&) {
    rep.degree_hits_correlation.reset();
  }
  if (opt.diagnostics) {
    rep.distance_stats = distance_diagnostic(first.embeddings, g, opt.distance_sample, cfg.seed);
    if (opt.clusters >= 2 && g.n_nodes() >= opt.clusters) {
      rep.cluster_stats = cluster_diagnostic(first.embeddings, g, opt.clusters, cfg.seed);
    }
  }
  return res;
}

}  // namespace coeba
