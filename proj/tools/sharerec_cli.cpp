#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sharerec/sharerec.hpp"

namespace {

using sharerec::RunConfig;

// Flags collected as raw key=value assignments so the precedence chain
// (defaults < config file < flags) runs through one resolver.
struct FlagCollector {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string config_path;

  void add_option(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
           flag, [this, key](const std::string& v) { entries.emplace_back(key, v); }, help)
        ->expected(1);
  }
};

void register_common(CLI::App* app, FlagCollector& fc) {
  app->add_option("--config", fc.config_path, "key = value config file");
  fc.add_option(app, "--interactions", "interactions", "interaction edge-list file");
  fc.add_option(app, "--social", "social", "social edge-list file");
  fc.add_option(app, "--threshold", "threshold", "minimum rating to keep an interaction");
  fc.add_option(app, "--out", "out", "output directory");
  fc.add_option(app, "--seed", "seed", "run seed");
}

void register_train(CLI::App* app, FlagCollector& fc) {
  fc.add_option(app, "--strategy", "strategy", "share | multi-sgr | no-warmup | vanilla");
  fc.add_option(app, "--ablation", "ablation", "comma list: no-sgr,no-hra,no-sw,cut-only,add-only");
  fc.add_option(app, "--backbone", "backbone", "generic | lightgcn-social");
  fc.add_option(app, "--zeta", "zeta", "positive-sample threshold position in [0,1]");
  fc.add_option(app, "--lambda", "lambda", "contrastive loss weight");
  fc.add_option(app, "--tau", "tau", "contrastive temperature");
  fc.add_option(app, "--epochs", "epochs", "maximum training epochs");
  fc.add_option(app, "--batch", "batch", "mini-batch size");
  fc.add_option(app, "--dim", "dim", "embedding dimension");
  fc.add_option(app, "--layers", "layers", "backbone propagation layers");
  fc.add_option(app, "--encoder-layers", "encoder_layers", "similarity encoder layers");
  fc.add_option(app, "--warmup", "warmup", "first rewiring epoch");
  fc.add_option(app, "--patience", "patience", "early-stopping patience (epochs)");
  fc.add_option(app, "--learning-rate", "learning_rate", "Adam learning rate");
  fc.add_option(app, "--l2", "l2", "L2 regularization coefficient");
  fc.add_option(app, "--exact-cl", "exact_cl", "true: exact InfoNCE negatives over all users");
  fc.add_option(app, "--separate-encoder", "separate_encoder", "true: encoder trains its own item table");
  fc.add_option(app, "--per-user-cap", "per_user_cap", "per-user candidate cap for edge adding (0 = exact)");
}

int run(int argc, char** argv) {
  CLI::App app{"sharerec: homophily-aware social graph rewiring for recommendation"};
  app.require_subcommand(1);
  FlagCollector fc;

  CLI::App* analyze = app.add_subcommand("analyze", "homophily distribution and summary of a dataset");
  register_common(analyze, fc);
  fc.add_option(analyze, "--bins", "bins", "histogram bin count");

  CLI::App* synth = app.add_subcommand("synth", "synthetic sub-graphs at target homophily ratios");
  register_common(synth, fc);
  fc.add_option(synth, "--targets", "targets", "comma list of target graph homophily ratios");
  fc.add_option(synth, "--range-lo", "range_lo", "minimum sampled user count");
  fc.add_option(synth, "--range-hi", "range_hi", "maximum sampled user count");
  fc.add_option(synth, "--avg-degree", "avg_degree", "social degree of the generated graph (0 = match source)");

  CLI::App* train_cmd = app.add_subcommand("train", "train and evaluate the best checkpoint on test");
  register_common(train_cmd, fc);
  register_train(train_cmd, fc);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved checkpoint on the test split");
  register_common(eval_cmd, fc);
  register_train(eval_cmd, fc);
  fc.add_option(eval_cmd, "--checkpoint", "checkpoint", "checkpoint file from train");
  fc.add_option(eval_cmd, "--rewired-social", "rewired_social", "weighted social edge list from train");

  CLI::App* ablate = app.add_subcommand("ablate", "baseline plus component ablations under one seed");
  register_common(ablate, fc);
  register_train(ablate, fc);

  CLI::App* sweep = app.add_subcommand("sweep", "grids over homophily targets or zeta/lambda");
  register_common(sweep, fc);
  register_train(sweep, fc);
  fc.add_option(sweep, "--sweep-mode", "sweep_mode", "hs | zeta | lambda");
  fc.add_option(sweep, "--targets", "targets", "comma list of target ratios (hs mode)");
  fc.add_option(sweep, "--range-lo", "range_lo", "minimum sampled user count");
  fc.add_option(sweep, "--range-hi", "range_hi", "maximum sampled user count");
  fc.add_option(sweep, "--avg-degree", "avg_degree", "social degree of generated graphs (0 = match source)");
  fc.add_option(sweep, "--zeta-grid", "zeta_grid", "comma list of zeta values");
  fc.add_option(sweep, "--lambda-grid", "lambda_grid", "comma list of lambda values");
  fc.add_option(sweep, "--repeats", "repeats", "seeds per cell");
  fc.add_option(sweep, "--parallel-cells", "parallel_cells", "independent cells to run concurrently");

  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::string>> file_entries;
  if (!fc.config_path.empty()) file_entries = sharerec::parse_config_file(fc.config_path);
  const RunConfig config = sharerec::resolve_config(file_entries, fc.entries);

  if (analyze->parsed()) {
    const auto out = sharerec::cmd_analyze(config);
    std::cout << "users=" << out.users << " items=" << out.items << " feedback=" << out.feedback
              << " relations=" << out.relations << "\n";
    std::cout << "graph_homophily=" << sharerec::format_double(out.table.graph_ratio)
              << " h_min=" << sharerec::format_double(out.table.h_min)
              << " h_max=" << sharerec::format_double(out.table.h_max) << "\n";
    if (out.social_stats.skipped_unknown > 0)
      std::cerr << "warning: skipped " << out.social_stats.skipped_unknown
                << " social lines with unknown user ids\n";
  } else if (synth->parsed()) {
    const auto rows = sharerec::cmd_synth(config);
    bool all_ok = true;
    for (const auto& row : rows) {
      if (row.ok())
        std::cout << "target=" << sharerec::format_double(row.target)
                  << " achieved=" << sharerec::format_double(row.achieved) << " users=" << row.users
                  << " social_edges=" << row.social_edges << "\n";
      else {
        std::cerr << "target=" << sharerec::format_double(row.target) << " failed: " << row.error << "\n";
        all_ok = false;
      }
    }
    if (!all_ok) return 1;
  } else if (train_cmd->parsed()) {
    const auto out = sharerec::cmd_train(config, [](const sharerec::EpochRecord& r) {
      std::cerr << "epoch " << r.epoch << " l_rec=" << sharerec::format_double(r.l_rec)
                << " l_cl=" << sharerec::format_double(r.l_cl) << " val_ndcg=" << sharerec::format_double(r.ndcg)
                << (r.rewire_events ? " [rewired]" : "") << "\n";
    });
    std::cout << "best_epoch=" << out.result.best_epoch << "\n";
    sharerec::write_metrics_report(std::cout, out.test);
  } else if (eval_cmd->parsed()) {
    sharerec::write_metrics_report(std::cout, sharerec::cmd_eval(config));
  } else if (ablate->parsed()) {
    for (const auto& row : sharerec::cmd_ablate(config))
      std::cout << row.variant << ": recall=" << sharerec::format_double(row.test.recall)
                << " precision=" << sharerec::format_double(row.test.precision)
                << " ndcg=" << sharerec::format_double(row.test.ndcg) << "\n";
  } else if (sweep->parsed()) {
    const auto rows = sharerec::cmd_sweep(config);
    std::cout << rows.size() << " sweep rows written\n";
    for (const auto& row : rows)
      if (!row.error.empty()) std::cerr << "cell failed: " << row.error << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
