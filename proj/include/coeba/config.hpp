#pragma once

// Flat `key=value` experiment configuration with dotted section keys,
// ablation-arm projections, and the structured text report format.

#include "coeba/eval.hpp"
#include "coeba/trainer.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

namespace coeba {

struct ExperimentSpec {
  std::string edges_path;
  std::string features_path;
  TrainConfig train;
  ExperimentOptions options;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline Real to_real(const std::string& key, const std::string& v) {
  auto r = parse_real(v);
  if (!r) throw ConfigError(key + ": expected a real number, got '" + v + "'");
  return *r;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::string s = v;
  bool neg = !s.empty() && s[0] == '-';
  if (neg) s.erase(0, 1);
  auto r = parse_nonneg_int(s);
  if (!r) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return neg ? -*r : *r;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

struct Setting {
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

/// Every recognized key, in report order.
inline const std::vector<std::pair<std::string, Setting>>& settings() {
  using S = ExperimentSpec;
  using Str = const std::string&;
  static const std::vector<std::pair<std::string, Setting>> table = {
      {"data.edges", {[](S& s, Str v) { s.edges_path = v; }, [](const S& s) { return s.edges_path; }}},
      {"data.features", {[](S& s, Str v) { s.features_path = v; }, [](const S& s) { return s.features_path; }}},
      {"train.lr", {[](S& s, Str v) { s.train.learning_rate = to_real("train.lr", v); },
                    [](const S& s) { return format_real(s.train.learning_rate); }}},
      {"train.weight_decay", {[](S& s, Str v) { s.train.weight_decay = to_real("train.weight_decay", v); },
                              [](const S& s) { return format_real(s.train.weight_decay); }}},
      {"train.decoupled_decay", {[](S& s, Str v) { s.train.decoupled_decay = to_bool("train.decoupled_decay", v); },
                                 [](const S& s) { return std::string(s.train.decoupled_decay ? "true" : "false"); }}},
      {"train.epochs", {[](S& s, Str v) { s.train.epochs = static_cast<int>(to_int("train.epochs", v)); },
                        [](const S& s) { return std::to_string(s.train.epochs); }}},
      {"train.seed", {[](S& s, Str v) { s.train.seed = static_cast<std::uint64_t>(to_int("train.seed", v)); },
                      [](const S& s) { return std::to_string(s.train.seed); }}},
      {"train.num_splits", {[](S& s, Str v) { s.train.num_splits = static_cast<int>(to_int("train.num_splits", v)); },
                            [](const S& s) { return std::to_string(s.train.num_splits); }}},
      {"train.eval_every", {[](S& s, Str v) { s.train.eval_every = static_cast<int>(to_int("train.eval_every", v)); },
                            [](const S& s) { return std::to_string(s.train.eval_every); }}},
      {"train.early_stop_patience",
       {[](S& s, Str v) { s.train.early_stop_patience = static_cast<int>(to_int("train.early_stop_patience", v)); },
        [](const S& s) { return std::to_string(s.train.early_stop_patience); }}},
      {"train.warmup_contrastive",
       {[](S& s, Str v) { s.train.warmup_contrastive = to_bool("train.warmup_contrastive", v); },
        [](const S& s) { return std::string(s.train.warmup_contrastive ? "true" : "false"); }}},
      {"train.single_view", {[](S& s, Str v) { s.train.single_view = to_bool("train.single_view", v); },
                             [](const S& s) { return std::string(s.train.single_view ? "true" : "false"); }}},
      {"split.train", {[](S& s, Str v) { s.train.ratios.train = to_real("split.train", v); },
                       [](const S& s) { return format_real(s.train.ratios.train); }}},
      {"split.valid", {[](S& s, Str v) { s.train.ratios.valid = to_real("split.valid", v); },
                       [](const S& s) { return format_real(s.train.ratios.valid); }}},
      {"split.test", {[](S& s, Str v) { s.train.ratios.test = to_real("split.test", v); },
                      [](const S& s) { return format_real(s.train.ratios.test); }}},
      {"eba.enabled", {[](S& s, Str v) { s.train.eba.enabled = to_bool("eba.enabled", v); },
                       [](const S& s) { return std::string(s.train.eba.enabled ? "true" : "false"); }}},
      {"eba.r_m", {[](S& s, Str v) { s.train.eba.r_m = to_real("eba.r_m", v); },
                   [](const S& s) { return format_real(s.train.eba.r_m); }}},
      {"eba.r_a", {[](S& s, Str v) { s.train.eba.r_a = to_real("eba.r_a", v); },
                   [](const S& s) { return format_real(s.train.eba.r_a); }}},
      {"eba.p_f", {[](S& s, Str v) { s.train.eba.p_f = to_real("eba.p_f", v); },
                   [](const S& s) { return format_real(s.train.eba.p_f); }}},
      {"eba.period", {[](S& s, Str v) { s.train.eba.period = static_cast<int>(to_int("eba.period", v)); },
                      [](const S& s) { return std::to_string(s.train.eba.period); }}},
      {"eba.warmup_epochs",
       {[](S& s, Str v) { s.train.eba.warmup_epochs = static_cast<int>(to_int("eba.warmup_epochs", v)); },
        [](const S& s) { return std::to_string(s.train.eba.warmup_epochs); }}},
      {"loss.lambda1", {[](S& s, Str v) { s.train.loss.lambda1 = to_real("loss.lambda1", v); },
                        [](const S& s) { return format_real(s.train.loss.lambda1); }}},
      {"loss.lambda2", {[](S& s, Str v) { s.train.loss.lambda2 = to_real("loss.lambda2", v); },
                        [](const S& s) { return format_real(s.train.loss.lambda2); }}},
      {"loss.lambda3", {[](S& s, Str v) { s.train.loss.lambda3 = to_real("loss.lambda3", v); },
                        [](const S& s) { return format_real(s.train.loss.lambda3); }}},
      {"loss.btn_weight", {[](S& s, Str v) { s.train.loss.btn_weight = to_real("loss.btn_weight", v); },
                           [](const S& s) { return format_real(s.train.loss.btn_weight); }}},
      {"loss.tau", {[](S& s, Str v) { s.train.loss.tau = to_real("loss.tau", v); },
                    [](const S& s) { return format_real(s.train.loss.tau); }}},
      {"loss.recon_mode", {[](S& s, Str v) { s.train.loss.recon_mode = parse_recon_mode(v); },
                           [](const S& s) { return to_string(s.train.loss.recon_mode); }}},
      {"encoder.backbone", {[](S& s, Str v) { s.train.encoder.backbone = parse_backbone(v); },
                            [](const S& s) { return to_string(s.train.encoder.backbone); }}},
      {"encoder.hidden_dim", {[](S& s, Str v) { s.train.encoder.hidden_dim = to_int("encoder.hidden_dim", v); },
                              [](const S& s) { return std::to_string(s.train.encoder.hidden_dim); }}},
      {"encoder.out_dim", {[](S& s, Str v) { s.train.encoder.out_dim = to_int("encoder.out_dim", v); },
                           [](const S& s) { return std::to_string(s.train.encoder.out_dim); }}},
      {"encoder.dropout", {[](S& s, Str v) { s.train.encoder.dropout = to_real("encoder.dropout", v); },
                           [](const S& s) { return format_real(s.train.encoder.dropout); }}},
      {"encoder.K", {[](S& s, Str v) { s.train.encoder.appnp_steps = static_cast<int>(to_int("encoder.K", v)); },
                     [](const S& s) { return std::to_string(s.train.encoder.appnp_steps); }}},
      {"encoder.beta", {[](S& s, Str v) { s.train.encoder.appnp_teleport = to_real("encoder.beta", v); },
                        [](const S& s) { return format_real(s.train.encoder.appnp_teleport); }}},
      {"encoder.scale", {[](S& s, Str v) { s.train.encoder.norm_scale = to_real("encoder.scale", v); },
                         [](const S& s) { return format_real(s.train.encoder.norm_scale); }}},
      {"eval.k", {[](S& s, Str v) { s.train.eval_k = static_cast<int>(to_int("eval.k", v)); },
                  [](const S& s) { return std::to_string(s.train.eval_k); }}},
      {"diag.clusters", {[](S& s, Str v) { s.options.clusters = static_cast<int>(to_int("diag.clusters", v)); },
                         [](const S& s) { return std::to_string(s.options.clusters); }}},
      {"diag.distance_sample",
       {[](S& s, Str v) { s.options.distance_sample = static_cast<std::size_t>(to_int("diag.distance_sample", v)); },
        [](const S& s) { return std::to_string(s.options.distance_sample); }}},
  };
  return table;
}

}  // namespace detail

/// Applies one `key=value` assignment. Unknown keys are a ConfigError.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  for (const auto& [name, s] : detail::settings()) {
    if (name == key) {
      s.set(spec, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

inline void apply_assignment(ExperimentSpec& spec, const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
  apply_setting(spec, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
}

inline ExperimentSpec parse_config(std::istream& in, const std::string& source = "<config>") {
  ExperimentSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    try {
      apply_assignment(spec, line);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

/// Relative dataset paths resolve against COEBA_DATA_DIR when it is set.
inline std::string resolve_data_path(const std::string& p) {
  namespace fs = std::filesystem;
  if (p.empty() || fs::path(p).is_absolute()) return p;
  if (const char* root = std::getenv("COEBA_DATA_DIR"); root && *root) {
    return (fs::path(root) / p).string();
  }
  return p;
}

/// All settings in fixed order, `key=value` per line.
inline std::string config_snapshot(const ExperimentSpec& spec, const std::string& prefix = {}) {
  std::string out;
  for (const auto& [name, s] : detail::settings()) {
    out += prefix + name + "=" + s.get(spec) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation arms and plug-and-play projections
// ---------------------------------------------------------------------------

enum class AblationArm { full, no_eba, no_cl, no_within_cl, no_btn_cl, no_eba_cl };

inline AblationArm parse_arm(const std::string& s) {
  if (s == "full") return AblationArm::full;
  if (s == "no_eba") return AblationArm::no_eba;
  if (s == "no_cl") return AblationArm::no_cl;
  if (s == "no_within_cl") return AblationArm::no_within_cl;
  if (s == "no_btn_cl") return AblationArm::no_btn_cl;
  if (s == "no_eba_cl") return AblationArm::no_eba_cl;
  throw ConfigError("unknown ablation arm '" + s + "'");
}

inline std::string arm_label(AblationArm a) {
  switch (a) {
    case AblationArm::full: return "CoEBA";
    case AblationArm::no_eba: return "w/o EBA";
    case AblationArm::no_cl: return "w/o CL";
    case AblationArm::no_within_cl: return "w/o within-CL";
    case AblationArm::no_btn_cl: return "w/o btn-CL";
    case AblationArm::no_eba_cl: return "w/o EBA & CL";
  }
  return "?";
}

/// Arms differ from the full method only in configuration.
inline TrainConfig project_arm(TrainConfig cfg, AblationArm arm) {
  const bool drop_eba = arm == AblationArm::no_eba || arm == AblationArm::no_eba_cl;
  const bool drop_within = arm == AblationArm::no_cl || arm == AblationArm::no_within_cl ||
                           arm == AblationArm::no_eba_cl;
  const bool drop_btn = arm == AblationArm::no_cl || arm == AblationArm::no_btn_cl ||
                        arm == AblationArm::no_eba_cl;
  if (drop_eba) cfg.eba.enabled = false;
  if (drop_within) cfg.loss.lambda2 = cfg.loss.lambda3 = 0.0;
  if (drop_btn) cfg.loss.btn_weight = 0.0;
  return cfg;
}

/// Plain backbone: reconstruction on the original graph only.
inline TrainConfig project_plain_backbone(TrainConfig cfg, Backbone b) {
  cfg.encoder.backbone = b;
  cfg.eba.enabled = false;
  cfg.single_view = true;
  cfg.loss.lambda2 = cfg.loss.lambda3 = cfg.loss.btn_weight = 0.0;
  return cfg;
}

/// Backbone plus EBA: reconstruction of both the original and the augmented
/// view, no contrastive terms.
inline TrainConfig project_backbone_with_eba(TrainConfig cfg, Backbone b) {
  cfg.encoder.backbone = b;
  cfg.eba.enabled = true;
  cfg.single_view = false;
  cfg.loss.lambda2 = cfg.loss.lambda3 = cfg.loss.btn_weight = 0.0;
  return cfg;
}

inline std::string backbone_label(Backbone b) {
  switch (b) {
    case Backbone::gae: return "GAE";
    case Backbone::gnae: return "GNAE";
    case Backbone::vgnae: return "VGNAE";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Ordered `key: value` lines. The first line of a written report is a
/// `#` header carrying the timestamp; everything after it is deterministic.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, Real value) { add(key, detail::format_real(value)); }
  void add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

  template <typename T>
  void add_list(const std::string& key, const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ' ';
      if constexpr (std::is_floating_point_v<T>) s += detail::format_real(xs[i]);
      else s += std::to_string(xs[i]);
    }
    add(key, s);
  }

  std::string body() const {
    std::string out;
    for (const auto& [k, v] : lines_) out += k + ": " + v + "\n";
    return out;
  }

  void write(const std::string& path, const std::string& header) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report " + path);
    out << "# " << header << '\n' << body();
  }

  const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

/// Reads a report back into key -> value, skipping the header.
inline std::map<std::string, std::string> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find(": ");
    if (sep == std::string::npos) continue;
    kv[line.substr(0, sep)] = line.substr(sep + 2);
  }
  return kv;
}

/// Report body without its header line.
inline std::string report_body(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path);
  std::string line, out;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && !line.empty() && line[0] == '#') {
      first = false;
      continue;
    }
    first = false;
    out += line + "\n";
  }
  return out;
}

inline void add_eval_report(Report& r, const EvalReport& e) {
  for (const auto& [k, ms] : e.hits_at_k) {
    r.add("hits_at_k." + std::to_string(k) + ".mean", ms.mean);
    r.add("hits_at_k." + std::to_string(k) + ".std", ms.std);
  }
  r.add_list("per_split_scores", e.per_split_scores);
  r.add("min_degree_original", e.min_degree_original);
  r.add("min_degree_augmented", e.min_degree_augmented);
  if (e.distance_stats) {
    const auto& d = *e.distance_stats;
    r.add("distance_stats.connected_mean", d.connected_mean);
    r.add("distance_stats.connected_median", d.connected_median);
    r.add("distance_stats.unconnected_mean", d.unconnected_mean);
    r.add("distance_stats.unconnected_median", d.unconnected_median);
    r.add("distance_stats.pairs", d.connected.size());
  }
  if (e.cluster_stats) {
    const auto& c = *e.cluster_stats;
    r.add_list("cluster_stats.densities", c.densities);
    r.add_list("cluster_stats.sizes", c.sizes);
    r.add("cluster_stats.graph_density", c.graph_density);
    r.add("cluster_stats.modularity", c.modularity);
  }
  if (e.degree_hits_correlation) r.add("degree_hits_correlation", *e.degree_hits_correlation);
  else r.add("degree_hits_correlation", std::string("absent"));
}

}  // namespace coeba
