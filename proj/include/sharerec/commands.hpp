#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <thread>

#include "sharerec/config.hpp"
#include "sharerec/homophily.hpp"
#include "sharerec/trainer.hpp"

namespace sharerec {

namespace detail {

inline void ensure_out_dir(const RunConfig& c) { std::filesystem::create_directories(c.out); }

inline std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// --- analyze -----------------------------------------------------------------

struct AnalyzeOutput {
  Index users = 0;
  Index items = 0;
  Index feedback = 0;   // retained interactions
  Index relations = 0;  // ordered user pairs
  SocialLoadStats social_stats;
  HomophilyTable table;
};

/// End-to-end homophily analysis: load, measure, dump histogram and summary.
inline AnalyzeOutput cmd_analyze(const RunConfig& c) {
  const InteractionGraph r = load_interactions(c.interactions, c.threshold);
  AnalyzeOutput out;
  const SocialGraph s = load_social(c.social, r, &out.social_stats);
  out.users = r.num_users();
  out.items = r.num_items();
  out.feedback = static_cast<Index>(r.edges().size());
  out.relations = s.relation_count();
  out.table = graph_homophily(s, r, c.bins);

  detail::ensure_out_dir(c);
  write_histogram_csv(detail::out_path(c, "histogram.csv"), out.table);
  std::ofstream summary(detail::out_path(c, "summary.txt"));
  summary << "users=" << out.users << "\n"
          << "items=" << out.items << "\n"
          << "feedback=" << out.feedback << "\n"
          << "relations=" << out.relations << "\n"
          << "social_edges=" << out.table.edges.size() << "\n"
          << "graph_homophily=" << format_double(out.table.graph_ratio) << "\n"
          << "h_min=" << format_double(out.table.h_min) << "\n"
          << "h_max=" << format_double(out.table.h_max) << "\n"
          << "skipped_unknown=" << out.social_stats.skipped_unknown << "\n"
          << "skipped_self_loops=" << out.social_stats.skipped_self << "\n";
  write_manifest(detail::out_path(c, "manifest.txt"), "analyze", c);
  return out;
}

// --- synth -------------------------------------------------------------------

struct SynthRow {
  double target = 0.0;
  double achieved = 0.0;
  Index users = 0;
  Index social_edges = 0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// One (social, interaction) file pair per target; a target that cannot be
/// reached records its error and the remaining targets still run.
inline std::vector<SynthRow> cmd_synth(const RunConfig& c) {
  const InteractionGraph source = load_interactions(c.interactions, c.threshold);
  SynthOptions opt;
  opt.avg_degree = c.avg_degree;
  if (opt.avg_degree <= 0.0) {
    if (c.social.empty()) throw std::invalid_argument("synth: need avg_degree or a source social graph");
    const SocialGraph s = load_social(c.social, source);
    opt.avg_degree = static_cast<double>(s.relation_count()) / s.num_users();
  }

  detail::ensure_out_dir(c);
  std::vector<SynthRow> rows;
  for (size_t t = 0; t < c.targets.size(); ++t) {
    SynthRow row;
    row.target = c.targets[t];
    try {
      const SynthResult res = synthesize_subgraph(source, row.target, {c.range_lo, c.range_hi},
                                                  c.train.seed + 7919 * t, opt);
      // Verified independently against the measurement path.
      row.achieved = graph_homophily(res.social, res.interactions).graph_ratio;
      row.users = res.interactions.num_users();
      row.social_edges = res.social.edge_count();
      const std::string tag = format_double(row.target);
      write_interactions(detail::out_path(c, "interactions_hs" + tag + ".txt"), res.interactions);
      write_social(detail::out_path(c, "social_hs" + tag + ".txt"), res.social, res.interactions);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::ofstream report(detail::out_path(c, "synth_report.csv"));
  report << "target,achieved,users,social_edges,status\n";
  for (const auto& row : rows)
    report << format_double(row.target) << ',' << format_double(row.achieved) << ',' << row.users << ','
           << row.social_edges << ',' << (row.ok() ? "ok" : row.error) << '\n';
  write_manifest(detail::out_path(c, "manifest.txt"), "synth", c);
  return rows;
}

// --- train / eval --------------------------------------------------------------

struct TrainOutput {
  TrainResult result;
  MetricsReport test;
};

inline MetricsReport evaluate_test(const EmbeddingState& state, const SocialGraph& social,
                                   const InteractionGraph& r, const TrainConfig& tc) {
  const Propagation prop(social, r, tc.backbone, tc.layers);
  const PropagatedEmbeddings pq = prop.forward(state.user_base, state.item_base);
  return evaluate_split(pq.users, pq.items, r, Split::test, {Split::train, Split::val}, tc.eval_k);
}

/// Trains per the resolved config, evaluates the best-validation checkpoint
/// on the test split, and writes history, rewire counts, checkpoint, social
/// graphs, metrics and manifest under the output directory.
inline TrainOutput cmd_train(const RunConfig& c, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  InteractionGraph r = load_interactions(c.interactions, c.threshold);
  const SocialGraph s = load_social(c.social, r);
  r.split(c.train_ratio, c.val_ratio, c.test_ratio, c.train.seed);

  TrainOutput out;
  out.result = train(c.train, r, s, on_epoch);
  out.test = evaluate_test(out.result.best_state, out.result.best_social, r, c.train);

  detail::ensure_out_dir(c);
  write_history_csv(detail::out_path(c, "history.csv"), out.result.history);
  write_rewire_csv(detail::out_path(c, "rewire.csv"), out.result.history);
  write_timings_csv(detail::out_path(c, "timings.csv"), out.result.history);
  save_checkpoint(detail::out_path(c, "checkpoint.bin"), out.result.best_state);
  write_social(detail::out_path(c, "social_best.txt"), out.result.best_social, r, true);
  write_social(detail::out_path(c, "social_final.txt"), out.result.final_social, r, true);
  {
    std::ofstream metrics(detail::out_path(c, "metrics.txt"));
    metrics << "best_epoch=" << out.result.best_epoch << "\n";
    write_metrics_report(metrics, out.test);
  }
  {
    std::ofstream csv(detail::out_path(c, "metrics.csv"));
    csv << "split,recall,precision,ndcg,users\n";
    csv << "val," << format_double(out.result.best_val.recall) << ',' << format_double(out.result.best_val.precision)
        << ',' << format_double(out.result.best_val.ndcg) << ',' << out.result.best_val.users_evaluated << '\n';
    csv << "test," << format_double(out.test.recall) << ',' << format_double(out.test.precision) << ','
        << format_double(out.test.ndcg) << ',' << out.test.users_evaluated << '\n';
  }
  write_manifest(detail::out_path(c, "manifest.txt"), "train", c);
  return out;
}

/// Re-evaluates a saved checkpoint on the test split. The social graph is the
/// rewired one when given (weighted edge list), otherwise the original.
inline MetricsReport cmd_eval(const RunConfig& c) {
  if (c.checkpoint.empty()) throw std::invalid_argument("eval: checkpoint path required");
  InteractionGraph r = load_interactions(c.interactions, c.threshold);
  const SocialGraph s =
      c.rewired_social.empty() ? load_social(c.social, r) : load_social_weighted(c.rewired_social, r);
  r.split(c.train_ratio, c.val_ratio, c.test_ratio, c.train.seed);
  const EmbeddingState state = load_checkpoint(c.checkpoint);
  if (state.user_base.rows() != r.num_users() || state.item_base.rows() != r.num_items())
    throw std::runtime_error("eval: checkpoint shape does not match the dataset");

  const MetricsReport report = evaluate_test(state, s, r, c.train);
  detail::ensure_out_dir(c);
  std::ofstream metrics(detail::out_path(c, "metrics.txt"));
  write_metrics_report(metrics, report);
  write_manifest(detail::out_path(c, "manifest.txt"), "eval", c);
  return report;
}

// --- ablate --------------------------------------------------------------------

struct AblateRow {
  std::string variant;
  MetricsReport test;
};

/// Baseline plus the five component ablations, all under the same seed and
/// data, emitted as a comparison table.
inline std::vector<AblateRow> cmd_ablate(const RunConfig& c) {
  InteractionGraph r = load_interactions(c.interactions, c.threshold);
  const SocialGraph s = load_social(c.social, r);
  r.split(c.train_ratio, c.val_ratio, c.test_ratio, c.train.seed);

  struct Variant {
    const char* name;
    Ablations ab;
  };
  const std::vector<Variant> variants = {
      {"baseline", {}},
      {"no-sgr", {.no_sgr = true}},
      {"no-hra", {.no_hra = true}},
      {"no-sw", {.no_sw = true}},
      {"cut-only", {.cut_only = true}},
      {"add-only", {.add_only = true}},
  };

  std::vector<AblateRow> rows;
  for (const auto& v : variants) {
    TrainConfig tc = c.train;
    tc.ablation = v.ab;
    const TrainResult res = train(tc, r, s);
    rows.push_back({v.name, evaluate_test(res.best_state, res.best_social, r, tc)});
  }

  detail::ensure_out_dir(c);
  std::ofstream csv(detail::out_path(c, "ablate.csv"));
  csv << "variant,recall,precision,ndcg\n";
  for (const auto& row : rows)
    csv << row.variant << ',' << format_double(row.test.recall) << ',' << format_double(row.test.precision) << ','
        << format_double(row.test.ndcg) << '\n';
  write_manifest(detail::out_path(c, "manifest.txt"), "ablate", c);
  return rows;
}

// --- sweep ---------------------------------------------------------------------

struct SweepRow {
  std::string mode;      // hs | zeta | lambda
  double value = 0.0;    // target H_s or grid value
  double dataset_hs = 0.0;
  std::string strategy;
  std::uint64_t seed = 0;
  MetricsReport test;
  std::string error;
};

namespace detail {

struct SweepJob {
  const InteractionGraph* interactions;
  const SocialGraph* social;
  TrainConfig tc;
  SweepRow row;  // filled except metrics
  double train_ratio, val_ratio, test_ratio;
};

inline void run_sweep_jobs(std::vector<SweepJob>& jobs, std::vector<SweepRow>& rows, int parallel) {
  rows.resize(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      SweepJob& job = jobs[i];
      SweepRow row = job.row;
      try {
        InteractionGraph r = *job.interactions;  // split mutates the copy
        r.split(job.train_ratio, job.val_ratio, job.test_ratio, job.tc.seed);
        const TrainResult res = train(job.tc, r, *job.social);
        row.test = evaluate_test(res.best_state, res.best_social, r, job.tc);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows[i] = std::move(row);
    }
  };
  if (parallel <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < parallel; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
}

}  // namespace detail

/// Grid experiments, one row per cell per seed with a mean/std summary.
/// hs mode synthesizes one dataset per target and compares the configured
/// strategy against vanilla on each; zeta/lambda modes vary one knob on the
/// given dataset. Cells are independent and can run in parallel.
inline std::vector<SweepRow> cmd_sweep(const RunConfig& c) {
  std::vector<detail::SweepJob> jobs;
  // Own the datasets for the duration of the jobs.
  std::vector<std::unique_ptr<InteractionGraph>> r_store;
  std::vector<std::unique_ptr<SocialGraph>> s_store;

  auto add_job = [&](const InteractionGraph* r, const SocialGraph* s, TrainConfig tc, SweepRow row) {
    detail::SweepJob job{r, s, std::move(tc), std::move(row), c.train_ratio, c.val_ratio, c.test_ratio};
    jobs.push_back(std::move(job));
  };

  if (c.sweep_mode == "hs") {
    const InteractionGraph source = load_interactions(c.interactions, c.threshold);
    SynthOptions opt;
    opt.avg_degree = c.avg_degree;
    if (opt.avg_degree <= 0.0) {
      if (c.social.empty()) throw std::invalid_argument("sweep: need avg_degree or a source social graph");
      const SocialGraph s = load_social(c.social, source);
      opt.avg_degree = static_cast<double>(s.relation_count()) / s.num_users();
    }
    for (size_t t = 0; t < c.targets.size(); ++t) {
      SynthResult synth = synthesize_subgraph(source, c.targets[t], {c.range_lo, c.range_hi},
                                              c.train.seed + 7919 * t, opt);
      const double achieved = graph_homophily(synth.social, synth.interactions).graph_ratio;
      r_store.push_back(std::make_unique<InteractionGraph>(std::move(synth.interactions)));
      s_store.push_back(std::make_unique<SocialGraph>(std::move(synth.social)));
      const InteractionGraph* r = r_store.back().get();
      const SocialGraph* s = s_store.back().get();
      std::vector<Strategy> methods = {Strategy::vanilla};
      if (c.train.strategy != Strategy::vanilla) methods.push_back(c.train.strategy);
      for (const Strategy strat : methods) {
        for (int rep = 0; rep < c.repeats; ++rep) {
          TrainConfig tc = c.train;
          tc.strategy = strat;
          tc.seed = c.train.seed + static_cast<std::uint64_t>(rep);
          SweepRow row{"hs", c.targets[t], achieved, to_string(strat), tc.seed, {}, {}};
          add_job(r, s, std::move(tc), std::move(row));
        }
      }
    }
  } else if (c.sweep_mode == "zeta" || c.sweep_mode == "lambda") {
    r_store.push_back(std::make_unique<InteractionGraph>(load_interactions(c.interactions, c.threshold)));
    const InteractionGraph* r = r_store.front().get();
    s_store.push_back(std::make_unique<SocialGraph>(load_social(c.social, *r)));
    const SocialGraph* s = s_store.front().get();
    const double dataset_hs = graph_homophily(*s, *r).graph_ratio;
    const auto& grid = c.sweep_mode == "zeta" ? c.zeta_grid : c.lambda_grid;
    for (double value : grid) {
      for (int rep = 0; rep < c.repeats; ++rep) {
        TrainConfig tc = c.train;
        (c.sweep_mode == "zeta" ? tc.zeta : tc.lambda) = value;
        tc.seed = c.train.seed + static_cast<std::uint64_t>(rep);
        SweepRow row{c.sweep_mode, value, dataset_hs, to_string(tc.strategy), tc.seed, {}, {}};
        add_job(r, s, std::move(tc), std::move(row));
      }
    }
  } else {
    throw std::invalid_argument("sweep: unknown mode '" + c.sweep_mode + "'");
  }

  std::vector<SweepRow> rows;
  detail::run_sweep_jobs(jobs, rows, c.parallel_cells);

  detail::ensure_out_dir(c);
  std::ofstream csv(detail::out_path(c, "sweep.csv"));
  csv << "mode,value,dataset_hs,strategy,seed,recall,precision,ndcg,status\n";
  for (const auto& row : rows)
    csv << row.mode << ',' << format_double(row.value) << ',' << format_double(row.dataset_hs) << ','
        << row.strategy << ',' << row.seed << ',' << format_double(row.test.recall) << ','
        << format_double(row.test.precision) << ',' << format_double(row.test.ndcg) << ','
        << (row.error.empty() ? "ok" : row.error) << '\n';

  // Aggregate over seeds within each (value, strategy) cell, preserving order.
  std::ofstream summary(detail::out_path(c, "sweep_summary.csv"));
  summary << "mode,value,strategy,n,recall_mean,recall_std,precision_mean,precision_std,ndcg_mean,ndcg_std\n";
  std::vector<std::pair<double, std::string>> seen;
  for (const auto& row : rows) {
    const std::pair<double, std::string> cell{row.value, row.strategy};
    if (std::find(seen.begin(), seen.end(), cell) != seen.end()) continue;
    seen.push_back(cell);
    std::vector<double> recalls, precisions, ndcgs;
    for (const auto& other : rows) {
      if (other.value != row.value || other.strategy != row.strategy || !other.error.empty()) continue;
      recalls.push_back(other.test.recall);
      precisions.push_back(other.test.precision);
      ndcgs.push_back(other.test.ndcg);
    }
    summary << row.mode << ',' << format_double(row.value) << ',' << row.strategy << ',' << recalls.size() << ','
            << format_double(detail::mean_of(recalls)) << ',' << format_double(detail::stddev_of(recalls)) << ','
            << format_double(detail::mean_of(precisions)) << ',' << format_double(detail::stddev_of(precisions))
            << ',' << format_double(detail::mean_of(ndcgs)) << ',' << format_double(detail::stddev_of(ndcgs))
            << '\n';
  }
  write_manifest(detail::out_path(c, "manifest.txt"), "sweep", c);
  return rows;
}

}  // namespace sharerec
