#pragma once

// Command-line front end. `run_command` is the whole program minus `main`,
// so tests can drive every subcommand in-process.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numeric/training error, 1 anything else.

#include "coeba/checkpoint.hpp"
#include "coeba/config.hpp"
#include "coeba/eba.hpp"
#include "coeba/eval.hpp"
#include "coeba/graph.hpp"
#include "coeba/synthetic.hpp"
#include "coeba/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace coeba {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

namespace cli {

namespace fs = std::filesystem;

inline std::string timestamp_header() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return std::string("coeba report generated ") + buf;
}

struct CommonOptions {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  long long seed = -1;
  int workers = 1;
  int k = 0;
};

inline void add_common(CLI::App* sub, CommonOptions& o, bool needs_out = true) {
  sub->add_option("--config", o.config, "experiment configuration file")->required();
  auto* out = sub->add_option("--out", o.out, "output directory");
  if (needs_out) out->required();
  sub->add_option("--set", o.sets, "override a configuration key (key=value)");
  sub->add_option("--seed", o.seed, "experiment seed");
  sub->add_option("--workers", o.workers, "parallel worker count")->check(CLI::PositiveNumber);
  sub->add_option("--k", o.k, "K for Hits@K")->check(CLI::PositiveNumber);
}

inline ExperimentSpec load_spec(const CommonOptions& o) {
  ExperimentSpec spec = load_config(o.config);
  for (const auto& s : o.sets) apply_assignment(spec, s);
  if (o.seed >= 0) spec.train.seed = static_cast<std::uint64_t>(o.seed);
  if (o.k > 0) spec.train.eval_k = o.k;
  spec.options.workers = o.workers;
  if (spec.edges_path.empty() || spec.features_path.empty()) {
    throw ConfigError("config must set data.edges and data.features");
  }
  return spec;
}

inline Graph load_dataset(const ExperimentSpec& spec) {
  const std::string e = resolve_data_path(spec.edges_path);
  const std::string f = resolve_data_path(spec.features_path);
  for (const auto& p : {e, f}) {
    if (!fs::exists(p)) throw DataError("dataset file not found: " + p);
  }
  return load_graph(e, f);
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir);
}

inline void add_header(Report& r, const std::string& label, const ExperimentSpec& spec, const Graph& g) {
  r.add("label", label);
  r.add("dataset.nodes", static_cast<std::int64_t>(g.n_nodes()));
  r.add("dataset.edges", g.n_edges());
  r.add("dataset.features", static_cast<std::int64_t>(g.feature_dim()));
  for (const auto& [name, s] : detail::settings()) r.add("config." + name, s.get(spec));
}

/// Writes per-split artifacts and the aggregate report; returns the report.
inline Report write_experiment(const std::string& out_dir, const std::string& label,
                               const ExperimentSpec& spec, const Graph& g,
                               const ExperimentResult& res) {
  ensure_dir(out_dir);
  Report r;
  add_header(r, label, spec, g);
  std::vector<std::string> hashes;
  std::vector<int> best_epochs;
  for (const auto& s : res.splits) {
    const std::string dir = (fs::path(out_dir) / ("split" + std::to_string(s.split))).string();
    ensure_dir(dir);
    write_split_manifest((fs::path(dir) / "manifest.txt").string(), s.split_edges);
    {
      std::ofstream log((fs::path(dir) / "train.log").string());
      write_train_log(log, s.train.log);
    }
    const int best = s.train.log.best_epoch >= 0 ? s.train.log.best_epoch
                                                  : static_cast<int>(s.train.log.epochs.size()) - 1;
    const std::string ckpt = "epoch" + std::to_string(best) + ".ckpt";
    save_checkpoint((fs::path(dir) / ckpt).string(),
                    Checkpoint{spec.train.encoder, s.train.params, g.feature_dim()});
    std::ofstream manifest((fs::path(dir) / "checkpoints.txt").string());
    manifest << "best=" << ckpt << '\n';
    manifest << "best_val_hits=" << detail::format_real(s.train.log.best_val_hits) << '\n';
    std::ostringstream h;
    h << std::hex << split_hash(s.split_edges);
    hashes.push_back(h.str());
    best_epochs.push_back(best);
  }
  std::string hash_list;
  for (std::size_t i = 0; i < hashes.size(); ++i) hash_list += (i ? " " : "") + hashes[i];
  r.add("split_hashes", hash_list);
  r.add_list("best_epochs", best_epochs);
  add_eval_report(r, res.report);
  r.write((fs::path(out_dir) / "report.txt").string(), timestamp_header());
  return r;
}

inline void print_summary(std::ostream& out, const std::string& label, const ExperimentSpec& spec,
                          const ExperimentResult& res) {
  auto it = res.report.hits_at_k.find(spec.train.eval_k);
  out << label << ": Hits@" << spec.train.eval_k << " = ";
  if (it != res.report.hits_at_k.end()) {
    out << 100.0 * it->second.mean << " +- " << 100.0 * it->second.std << " (%)\n";
  } else {
    out << "n/a\n";
  }
}

inline std::vector<Real> parse_list(const std::string& s) {
  std::vector<Real> xs;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) continue;
    xs.push_back(detail::to_real("grid list", tok));
  }
  if (xs.empty()) throw ConfigError("empty value list '" + s + "'");
  return xs;
}

/// Parameters for embedding-based commands: from a checkpoint when given,
/// otherwise from a warm-up run.
inline Checkpoint obtain_model(const std::string& checkpoint, const Graph& g,
                               const ExperimentSpec& spec) {
  if (!checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(checkpoint);
    if (ck.feature_dim != g.feature_dim()) {
      throw ShapeError("checkpoint expects " + std::to_string(ck.feature_dim) +
                       " features, dataset has " + std::to_string(g.feature_dim()));
    }
    return ck;
  }
  return Checkpoint{spec.train.encoder, warmup(g, spec.train).params, g.feature_dim()};
}

}  // namespace cli

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  using namespace cli;

  CLI::App app{"CoEBA: contrastive link prediction with edge balancing augmentation", "coeba"};
  app.require_subcommand(1);

  CommonOptions train_o;
  auto* train_cmd = app.add_subcommand("train", "train and evaluate over repeated splits");
  add_common(train_cmd, train_o);

  CommonOptions ablate_o;
  std::string arm = "full";
  auto* ablate_cmd = app.add_subcommand("ablate", "run one ablation arm");
  add_common(ablate_cmd, ablate_o);
  ablate_cmd->add_option("--arm", arm, "full, no_eba, no_cl, no_within_cl, no_btn_cl, no_eba_cl")
      ->required();

  CommonOptions plug_o;
  std::string backbone = "vgnae";
  auto* plug_cmd = app.add_subcommand("plug", "backbone with and without EBA on identical splits");
  add_common(plug_cmd, plug_o);
  plug_cmd->add_option("--backbone", backbone, "gae, gnae or vgnae")->required();

  CommonOptions aug_o;
  std::string aug_ckpt;
  auto* augment_cmd = app.add_subcommand("augment", "emit one augmented view");
  add_common(augment_cmd, aug_o);
  augment_cmd->add_option("--checkpoint", aug_ckpt, "model checkpoint (default: warm-up run)");

  CommonOptions diag_o;
  std::string diag_ckpt, diag_manifest;
  int clusters = 0;
  std::size_t distance_sample = 0;
  int bins = 50;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "latent-space diagnostics for a checkpoint");
  add_common(diagnose_cmd, diag_o);
  diagnose_cmd->add_option("--checkpoint", diag_ckpt, "model checkpoint")->required();
  diagnose_cmd->add_option("--manifest", diag_manifest, "split manifest; enables Hits@K");
  diagnose_cmd->add_option("--clusters", clusters, "k for k-means");
  diagnose_cmd->add_option("--sample", distance_sample, "cap on connected pairs (0 = all)");
  diagnose_cmd->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);

  CommonOptions grid_o;
  std::string rm_list, ra_list;
  auto* grid_cmd = app.add_subcommand("grid", "sensitivity surface over r_m x r_a");
  add_common(grid_cmd, grid_o);
  grid_cmd->add_option("--rm", rm_list, "comma-separated removal ratios")->required();
  grid_cmd->add_option("--ra", ra_list, "comma-separated addition ratios")->required();

  CommonOptions eval_o;
  std::string eval_ckpt, eval_manifest;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a stored split manifest");
  add_common(eval_cmd, eval_o, false);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "split manifest")->required();

  std::string synth_out;
  PlantedPartitionConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic planted-partition dataset");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--nodes", synth.n_nodes, "node count");
  synth_cmd->add_option("--communities", synth.communities, "community count");
  synth_cmd->add_option("--p-in", synth.p_in, "within-community edge probability");
  synth_cmd->add_option("--p-out", synth.p_out, "between-community edge probability");
  synth_cmd->add_option("--features", synth.feature_dim, "feature dimension");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");

  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  static char prog[] = "coeba";
  argv.push_back(prog);
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "coeba: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed() || ablate_cmd->parsed()) {
      const bool is_train = train_cmd->parsed();
      const CommonOptions& o = is_train ? train_o : ablate_o;
      ExperimentSpec spec = load_spec(o);
      std::string label = "CoEBA";
      if (!is_train) {
        const AblationArm a = parse_arm(arm);
        spec.train = project_arm(spec.train, a);
        label = arm_label(a);
      }
      spec.train.validate();
      const Graph g = load_dataset(spec);
      const ExperimentResult res = run_experiment(g, spec.train, spec.options);
      write_experiment(o.out, label, spec, g, res);
      print_summary(out, label, spec, res);
      return kExitOk;
    }

    if (plug_cmd->parsed()) {
      ExperimentSpec spec = load_spec(plug_o);
      const Backbone b = parse_backbone(backbone);
      const Graph g = load_dataset(spec);
      ExperimentSpec base = spec, with = spec;
      base.train = project_plain_backbone(spec.train, b);
      with.train = project_backbone_with_eba(spec.train, b);
      base.train.validate();
      with.train.validate();
      const ExperimentResult r_base = run_experiment(g, base.train, base.options);
      const ExperimentResult r_with = run_experiment(g, with.train, with.options);
      for (std::size_t s = 0; s < r_base.splits.size(); ++s) {
        if (split_hash(r_base.splits[s].split_edges) != split_hash(r_with.splits[s].split_edges)) {
          throw Error("plug: baseline and +EBA runs saw different splits");
        }
      }
      const std::string l_base = backbone_label(b), l_with = backbone_label(b) + " + EBA";
      write_experiment((fs::path(plug_o.out) / "baseline").string(), l_base, base, g, r_base);
      write_experiment((fs::path(plug_o.out) / "eba").string(), l_with, with, g, r_with);
      Report agg;
      agg.add("backbone", to_string(b));
      const int k = spec.train.eval_k;
      const auto& hb = r_base.report.hits_at_k.at(k);
      const auto& hw = r_with.report.hits_at_k.at(k);
      agg.add("baseline.label", l_base);
      agg.add("baseline.hits_at_k." + std::to_string(k) + ".mean", hb.mean);
      agg.add("baseline.hits_at_k." + std::to_string(k) + ".std", hb.std);
      agg.add("eba.label", l_with);
      agg.add("eba.hits_at_k." + std::to_string(k) + ".mean", hw.mean);
      agg.add("eba.hits_at_k." + std::to_string(k) + ".std", hw.std);
      agg.add("improvement", hw.mean - hb.mean);
      agg.add("splits_identical", std::string("true"));
      agg.write((fs::path(plug_o.out) / "plug_report.txt").string(), timestamp_header());
      print_summary(out, l_base, base, r_base);
      print_summary(out, l_with, with, r_with);
      return kExitOk;
    }

    if (augment_cmd->parsed()) {
      ExperimentSpec spec = load_spec(aug_o);
      spec.train.eba.validate();
      spec.train.encoder.validate();
      const Graph g = load_dataset(spec);
      const Checkpoint ck = obtain_model(aug_ckpt, g, spec);
      const Matrix z = eval_embeddings(g, normalized_adjacency(g), ck.params, ck.config);
      Rng rng(derive_seed(spec.train.seed, 0x6175676d));
      const AugmentedView view = make_augmented_view(g, z, decode(z), spec.train.eba, rng);
      ensure_dir(aug_o.out);
      const std::string snapshot = "coeba augmented view\n" + config_snapshot(spec);
      write_edge_list((fs::path(aug_o.out) / "augmented.edges").string(), view.graph.edges(), snapshot);
      write_features((fs::path(aug_o.out) / "augmented.features").string(), view.graph.features(),
                     snapshot);
      Report r;
      add_header(r, "augment", spec, g);
      r.add("augmented.edges", view.graph.n_edges());
      r.add("min_degree_original", degrees(g).min);
      r.add("min_degree_augmented", degrees(view.graph).min);
      r.write((fs::path(aug_o.out) / "report.txt").string(), timestamp_header());
      out << "augmented view: " << view.graph.n_edges() << " edges (original " << g.n_edges()
          << "), min degree " << degrees(g).min << " -> " << degrees(view.graph).min << '\n';
      return kExitOk;
    }

    if (diagnose_cmd->parsed()) {
      ExperimentSpec spec = load_spec(diag_o);
      if (clusters > 0) spec.options.clusters = clusters;
      if (distance_sample > 0) spec.options.distance_sample = distance_sample;
      const Graph g = load_dataset(spec);
      const Checkpoint ck = obtain_model(diag_ckpt, g, spec);
      std::optional<EdgeSplit> split;
      if (!diag_manifest.empty()) split = read_split_manifest(diag_manifest);
      const Graph view = split ? g.with_edges(split->train_pos) : g;
      const Matrix z = eval_embeddings(view, normalized_adjacency(view), ck.params, ck.config);

      EvalReport rep;
      rep.min_degree_original = degrees(view).min;
      rep.min_degree_augmented =
          degrees(eba_augment(view, z, decode(z), spec.train.eba).graph).min;
      if (split) {
        const auto pos = decode(z, split->test_pos);
        const auto neg = decode(z, split->test_neg);
        const Real h = hits_at_k(pos, neg, spec.train.eval_k);
        rep.hits_at_k[spec.train.eval_k] = MeanStd{h, 0.0};
        rep.per_split_scores.push_back(h);
      }
      rep.distance_stats = distance_diagnostic(z, g, spec.options.distance_sample, spec.train.seed);
      rep.cluster_stats = cluster_diagnostic(z, g, spec.options.clusters, spec.train.seed);

      ensure_dir(diag_o.out);
      Report r;
      add_header(r, "diagnose", spec, g);
      add_eval_report(r, rep);
      r.write((fs::path(diag_o.out) / "report.txt").string(), timestamp_header());

      const auto& d = *rep.distance_stats;
      Real hi = 0.0;
      for (Real x : d.connected) hi = std::max(hi, x);
      for (Real x : d.unconnected) hi = std::max(hi, x);
      auto write_hist = [&](const std::string& name, const std::vector<Real>& xs) {
        std::ofstream f((fs::path(diag_o.out) / name).string());
        f << "# bin_center\tcount\n";
        for (const auto& [c, n] : histogram(xs, 0.0, hi, bins)) f << detail::format_real(c) << '\t' << n << '\n';
      };
      write_hist("distances_connected.tsv", d.connected);
      write_hist("distances_unconnected.tsv", d.unconnected);
      std::ofstream ct((fs::path(diag_o.out) / "cluster_density.tsv").string());
      ct << "# cluster\tsize\tdensity\n";
      const auto& c = *rep.cluster_stats;
      for (std::size_t i = 0; i < c.densities.size(); ++i) {
        ct << i << '\t' << c.sizes[i] << '\t' << detail::format_real(c.densities[i]) << '\n';
      }
      out << "connected mean distance " << d.connected_mean << ", unconnected "
          << d.unconnected_mean << "; modularity " << c.modularity << " (graph density "
          << c.graph_density << ")\n";
      return kExitOk;
    }

    if (grid_cmd->parsed()) {
      ExperimentSpec spec = load_spec(grid_o);
      const auto rms = parse_list(rm_list);
      const auto ras = parse_list(ra_list);
      const Graph g = load_dataset(spec);
      ensure_dir(grid_o.out);
      std::ofstream tsv((fs::path(grid_o.out) / "grid.tsv").string());
      tsv << "# r_m\tr_a\thits_mean\thits_std\tstatus\n";
      for (Real rm : rms) {
        for (Real ra : ras) {
          ExperimentSpec cell = spec;
          cell.train.eba.r_m = rm;
          cell.train.eba.r_a = ra;
          const std::string tag = "rm" + detail::format_real(rm) + "_ra" + detail::format_real(ra);
          try {
            cell.train.validate();
          } catch (const ConfigError& e) {
            tsv << detail::format_real(rm) << '\t' << detail::format_real(ra) << "\tnan\tnan\tskipped ("
                << e.what() << ")\n";
            continue;
          }
          const ExperimentResult res = run_experiment(g, cell.train, cell.options);
          write_experiment((fs::path(grid_o.out) / tag).string(), "CoEBA " + tag, cell, g, res);
          const auto& h = res.report.hits_at_k.at(cell.train.eval_k);
          tsv << detail::format_real(rm) << '\t' << detail::format_real(ra) << '\t'
              << detail::format_real(h.mean) << '\t' << detail::format_real(h.std) << "\tok\n";
          out << tag << ": " << 100.0 * h.mean << " +- " << 100.0 * h.std << '\n';
        }
      }
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      ExperimentSpec spec = load_spec(eval_o);
      const Graph g = load_dataset(spec);
      const Checkpoint ck = obtain_model(eval_ckpt, g, spec);
      const EdgeSplit split = read_split_manifest(eval_manifest);
      const Graph view = g.with_edges(split.train_pos);
      const Matrix z = eval_embeddings(view, normalized_adjacency(view), ck.params, ck.config);
      const int k = spec.train.eval_k;
      Report r;
      r.add("checkpoint", eval_ckpt);
      r.add("manifest", eval_manifest);
      r.add("k", k);
      r.add("valid_hits", hits_at_k(decode(z, split.valid_pos), decode(z, split.valid_neg), k));
      r.add("test_hits", hits_at_k(decode(z, split.test_pos), decode(z, split.test_neg), k));
      if (!eval_o.out.empty()) {
        ensure_dir(eval_o.out);
        r.write((fs::path(eval_o.out) / "eval_report.txt").string(), timestamp_header());
      }
      out << r.body();
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      const PlantedPartition pp = planted_partition(synth);
      ensure_dir(synth_out);
      save_graph(pp.graph, (fs::path(synth_out) / "graph.edges").string(),
                 (fs::path(synth_out) / "graph.features").string());
      std::ofstream cfg((fs::path(synth_out) / "synthetic.cfg").string());
      cfg << "# planted partition, " << pp.graph.n_nodes() << " nodes, " << pp.graph.n_edges()
          << " edges\n";
      const fs::path root = fs::absolute(synth_out);
      cfg << "data.edges=" << (root / "graph.edges").string() << '\n';
      cfg << "data.features=" << (root / "graph.features").string() << '\n';
      out << "wrote " << pp.graph.n_nodes() << " nodes, " << pp.graph.n_edges() << " edges to "
          << synth_out << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "coeba: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "coeba: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "coeba: numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "coeba: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}

}  // namespace coeba
