#pragma once

#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sharerec/backbone.hpp"
#include "sharerec/embedding.hpp"
#include "sharerec/encoder.hpp"
#include "sharerec/graph.hpp"
#include "sharerec/hra.hpp"
#include "sharerec/metrics.hpp"
#include "sharerec/rewire.hpp"

namespace sharerec {

enum class Strategy { share, multi_sgr, no_warmup, vanilla };

inline Strategy strategy_from_string(const std::string& name) {
  if (name == "share") return Strategy::share;
  if (name == "multi-sgr" || name == "multi_sgr") return Strategy::multi_sgr;
  if (name == "no-warmup" || name == "no_warmup") return Strategy::no_warmup;
  if (name == "vanilla") return Strategy::vanilla;
  throw std::invalid_argument("unknown strategy: " + name);
}

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::share: return "share";
    case Strategy::multi_sgr: return "multi-sgr";
    case Strategy::no_warmup: return "no-warmup";
    case Strategy::vanilla: return "vanilla";
  }
  return "?";
}

struct Ablations {
  bool no_sgr = false;
  bool no_hra = false;
  bool no_sw = false;
  bool cut_only = false;
  bool add_only = false;

  bool any() const { return no_sgr || no_hra || no_sw || cut_only || add_only; }
};

inline Ablations ablations_from_string(const std::string& csv) {
  Ablations a;
  std::string tok;
  std::istringstream ss(csv);
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok == "none") continue;
    if (tok == "no-sgr" || tok == "no_sgr") a.no_sgr = true;
    else if (tok == "no-hra" || tok == "no_hra") a.no_hra = true;
    else if (tok == "no-sw" || tok == "no_sw") a.no_sw = true;
    else if (tok == "cut-only" || tok == "cut_only") a.cut_only = true;
    else if (tok == "add-only" || tok == "add_only") a.add_only = true;
    else throw std::invalid_argument("unknown ablation: " + tok);
  }
  return a;
}

struct TrainConfig {
  BackboneKind backbone = BackboneKind::lightgcn_social;
  int epochs = 200;
  Index batch_size = 2048;
  double learning_rate = 0.001;
  Index dim = 64;
  int layers = 2;
  int encoder_layers = 2;
  double zeta = 0.5;
  double lambda = 0.01;
  double tau = 0.1;
  double l2 = 1e-4;
  Strategy strategy = Strategy::share;
  int warmup_epoch = 10;
  Ablations ablation;
  std::uint64_t seed = 1;
  int patience = 50;
  bool exact_cl = false;  // exact InfoNCE negatives (all users); reference mode
  bool separate_encoder_table = false;
  int per_user_cap = 0;
  int eval_k = 10;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch size must be >= 1");
    if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
    if (layers < 1 || encoder_layers < 1) throw std::invalid_argument("config: layers must be >= 1");
    if (zeta < 0.0 || zeta > 1.0) throw std::invalid_argument("config: zeta out of [0,1]");
    if (tau <= 0.0) throw std::invalid_argument("config: tau must be positive");
    if (patience < 0) throw std::invalid_argument("config: patience must be >= 0");
    if (warmup_epoch < 1) throw std::invalid_argument("config: warmup epoch must be >= 1");
    if (ablation.no_sgr && (ablation.cut_only || ablation.add_only))
      throw std::invalid_argument("config: no-sgr conflicts with cut-only/add-only");
    if (ablation.cut_only && ablation.add_only)
      throw std::invalid_argument("config: cut-only conflicts with add-only");
  }
};

inline RewireOptions rewire_options(const TrainConfig& c) {
  RewireOptions o;
  o.cut_only = c.ablation.cut_only;
  o.add_only = c.ablation.add_only;
  o.unit_weights = c.ablation.no_sw;
  o.per_user_cap = c.per_user_cap;
  return o;
}

inline bool sgr_enabled(const TrainConfig& c) {
  return c.strategy != Strategy::vanilla && !c.ablation.no_sgr;
}

inline bool hra_enabled(const TrainConfig& c) {
  return c.strategy != Strategy::vanilla && !c.ablation.no_hra && c.lambda != 0.0;
}

/// Rewire at iteration n of epoch k (both 1-based)?
inline bool sgr_due(const TrainConfig& c, int k, int n) {
  if (!sgr_enabled(c)) return false;
  switch (c.strategy) {
    case Strategy::share: return k >= c.warmup_epoch && n == 1;
    case Strategy::multi_sgr: return k >= c.warmup_epoch;
    case Strategy::no_warmup: return n == 1;
    case Strategy::vanilla: return false;
  }
  return false;
}

/// How many rewiring events a full run of `epochs` epochs with `iters`
/// iterations each performs.
inline long expected_rewire_events(const TrainConfig& c, int epochs, int iters) {
  if (!sgr_enabled(c)) return 0;
  switch (c.strategy) {
    case Strategy::share: return std::max(0, epochs - c.warmup_epoch + 1);
    case Strategy::multi_sgr: return static_cast<long>(std::max(0, epochs - c.warmup_epoch + 1)) * iters;
    case Strategy::no_warmup: return epochs;
    case Strategy::vanilla: return 0;
  }
  return 0;
}

struct EpochRecord {
  int epoch = 0;
  double l_rec = 0.0;  // mean BPR loss per training triple
  double l_cl = 0.0;   // mean contrastive loss per iteration (0 when inactive)
  double recall = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
  Index cut_count = 0;  // from the last rewiring event of the epoch
  Index add_count = 0;
  int rewire_events = 0;
  double seconds = 0.0;  // wall clock; excluded from the deterministic CSV
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  long total_rewire_events = 0;
  int iterations_per_epoch = 0;
};

struct TrainResult {
  EmbeddingState best_state;
  SocialGraph best_social;   // social graph in effect at the best epoch
  SocialGraph final_social;  // social graph after the last epoch
  TrainHistory history;
  int best_epoch = 0;
  MetricsReport best_val;
};

class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(int epoch, int iteration, const std::string& what)
      : std::runtime_error("training fault at epoch " + std::to_string(epoch) + ", iteration " +
                           std::to_string(iteration) + ": " + what) {}
};

/// Joint optimization of the ranking loss and lambda-weighted contrastive
/// loss, with strategy-gated social graph rewiring, per-epoch validation and
/// early stopping. Rewiring always starts from the original social graph;
/// before the first rewiring event the backbone propagates over the original
/// graph. Deterministic (bit-identical history) for a fixed config and seed.
inline TrainResult train(const TrainConfig& config, const InteractionGraph& r, const SocialGraph& s,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();

  std::vector<Index> train_edge_ids;
  for (size_t i = 0; i < r.edges().size(); ++i)
    if (r.edges()[i].split == Split::train) train_edge_ids.push_back(static_cast<Index>(i));
  if (train_edge_ids.empty()) throw std::invalid_argument("train: no training edges");
  const auto num_train = static_cast<Index>(train_edge_ids.size());
  const int iters = static_cast<int>((num_train + config.batch_size - 1) / config.batch_size);

  AdamParams opt;
  opt.learning_rate = config.learning_rate;
  opt.l2 = config.l2;
  EmbeddingState state =
      init_embeddings(r.num_users(), r.num_items(), config.dim, config.seed, opt, config.separate_encoder_table);

  const UserEncoder encoder(r, config.encoder_layers);
  const bool use_hra = hra_enabled(config);
  PositiveSampleSets positives;
  if (use_hra) positives = select_positives(graph_homophily(s, r), s, config.zeta);

  SocialGraph current_social = s;
  Propagation prop(current_social, r, config.backbone, config.layers);
  const RewireOptions rw_opts = rewire_options(config);

  Rng neg_rng = make_stream(config.seed, "neg");
  Rng shuffle_rng = make_stream(config.seed, "shuffle");

  TrainResult result;
  result.history.iterations_per_epoch = iters;
  double best_ndcg = -1.0, best_recall = -1.0;
  double run_best_recall = -1.0, run_best_precision = -1.0, run_best_ndcg = -1.0;
  int bad_epochs = 0;

  std::vector<Index> anchors;  // batch-mode InfoNCE anchors, reused
  for (int k = 1; k <= config.epochs; ++k) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(train_edge_ids);

    EpochRecord rec;
    rec.epoch = k;
    double epoch_rec_loss = 0.0, epoch_cl_loss = 0.0;

    for (int n = 1; n <= iters; ++n) {
      const bool do_rewire = sgr_due(config, k, n);
      const bool need_codes = do_rewire || use_hra;
      Matrix z;
      if (need_codes) z = encoder.encode(state.encoder_items());

      if (do_rewire) {
        auto [rewired, report] = rewire(s, z, rw_opts);
        current_social = std::move(rewired);
        prop = Propagation(current_social, r, config.backbone, config.layers);
        rec.cut_count = report.cut_count;
        rec.add_count = report.add_count;
        rec.rewire_events++;
        result.history.total_rewire_events++;
      }

      // Mini-batch of (user, positive, sampled negative) triples.
      const Index lo = (n - 1) * config.batch_size;
      const Index hi = std::min(num_train, lo + config.batch_size);
      std::vector<BprTriple> batch;
      batch.reserve(static_cast<size_t>(hi - lo));
      for (Index b = lo; b < hi; ++b) {
        const auto& e = r.edges()[static_cast<size_t>(train_edge_ids[static_cast<size_t>(b)])];
        batch.push_back({e.user, e.item, sample_negative(e.user, r, neg_rng)});
      }

      const PropagatedEmbeddings pq = prop.forward(state.user_base, state.item_base);
      Matrix grad_p(pq.users.rows(), pq.users.cols());
      Matrix grad_q(pq.items.rows(), pq.items.cols());
      const double l_rec = bpr_loss(batch, pq.users, pq.items, &grad_p, &grad_q);

      Gradients g = state.zero_gradients();
      prop.backward(grad_p, grad_q, g.user, g.item);

      double l_cl = 0.0;
      if (use_hra) {
        InfoNceResult nce;
        if (config.exact_cl) {
          nce = infonce_loss_exact(z, positives, config.tau);
        } else {
          anchors.clear();
          for (const auto& t : batch) anchors.push_back(t.user);
          std::sort(anchors.begin(), anchors.end());
          anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
          nce = infonce_loss(z, positives, anchors, anchors, config.tau);
        }
        l_cl = nce.loss;
        const Matrix grad_items = encoder.backward(nce.grad_z);
        if (state.has_encoder_table())
          g.enc_item.add_scaled(grad_items, config.lambda);
        else
          g.item.add_scaled(grad_items, config.lambda);
      }

      if (!std::isfinite(l_rec) || !std::isfinite(l_cl))
        throw TrainingFault(k, n, "non-finite loss (l_rec=" + format_double(l_rec) +
                                      ", l_cl=" + format_double(l_cl) + ")");

      adam_step(state, g);
      epoch_rec_loss += l_rec;
      epoch_cl_loss += l_cl;
    }

    if (!state.all_finite()) throw TrainingFault(k, iters, "non-finite parameter after update");

    rec.l_rec = epoch_rec_loss / num_train;
    rec.l_cl = epoch_cl_loss / iters;

    // Validation on the current epoch's graph state.
    const PropagatedEmbeddings pq = prop.forward(state.user_base, state.item_base);
    const MetricsReport val = evaluate_split(pq.users, pq.items, r, Split::val, {Split::train}, config.eval_k);
    rec.recall = val.recall;
    rec.precision = val.precision;
    rec.ndcg = val.ndcg;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.ndcg > best_ndcg || (val.ndcg == best_ndcg && val.recall > best_recall)) {
      best_ndcg = val.ndcg;
      best_recall = val.recall;
      result.best_state = state;
      result.best_social = current_social;
      result.best_epoch = k;
      result.best_val = val;
    }

    const bool improved =
        val.recall > run_best_recall || val.precision > run_best_precision || val.ndcg > run_best_ndcg;
    run_best_recall = std::max(run_best_recall, val.recall);
    run_best_precision = std::max(run_best_precision, val.precision);
    run_best_ndcg = std::max(run_best_ndcg, val.ndcg);
    bad_epochs = improved ? 0 : bad_epochs + 1;
    if (bad_epochs >= std::max(config.patience, 1)) break;
  }

  result.final_social = std::move(current_social);
  return result;
}

/// True once no tracked validation metric has beaten its running best for
/// `patience` consecutive epochs (patience 0: the first flat epoch stops).
inline bool early_stop(const std::vector<EpochRecord>& history, int patience) {
  double best_r = -1.0, best_p = -1.0, best_n = -1.0;
  int bad = 0;
  for (const auto& rec : history) {
    const bool improved = rec.recall > best_r || rec.precision > best_p || rec.ndcg > best_n;
    best_r = std::max(best_r, rec.recall);
    best_p = std::max(best_p, rec.precision);
    best_n = std::max(best_n, rec.ndcg);
    bad = improved ? 0 : bad + 1;
    if (bad >= std::max(patience, 1)) return true;
  }
  return false;
}

inline void write_history_csv(const std::string& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
  out << "epoch,l_rec,l_cl,recall,precision,ndcg,cut_count,add_count,rewire_events\n";
  for (const auto& r : h.epochs)
    out << r.epoch << ',' << format_double(r.l_rec) << ',' << format_double(r.l_cl) << ','
        << format_double(r.recall) << ',' << format_double(r.precision) << ',' << format_double(r.ndcg) << ','
        << r.cut_count << ',' << r.add_count << ',' << r.rewire_events << '\n';
}

/// Per-epoch rewired-edge counts, one row per epoch with at least one event.
inline void write_rewire_csv(const std::string& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_rewire_csv: cannot open " + path);
  out << "epoch,cut_count,add_count\n";
  for (const auto& r : h.epochs)
    if (r.rewire_events > 0) out << r.epoch << ',' << r.cut_count << ',' << r.add_count << '\n';
}

inline void write_timings_csv(const std::string& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_timings_csv: cannot open " + path);
  out << "epoch,seconds\n";
  for (const auto& r : h.epochs) out << r.epoch << ',' << format_double(r.seconds) << '\n';
}

}  // namespace sharerec
