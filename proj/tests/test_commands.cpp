#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sharerec/commands.hpp"
#include "support/fixtures.hpp"

using namespace sharerec;

namespace {

namespace fs = std::filesystem;

struct TempDataset {
  fs::path dir;
  std::string interactions;
  std::string social;
};

TempDataset write_tiny(const std::string& name, std::uint64_t seed) {
  TempDataset t;
  t.dir = fs::temp_directory_path() / "sharerec_cmds" / name;
  fs::create_directories(t.dir);
  const auto data = testing::tiny_dataset(seed);
  t.interactions = (t.dir / "interactions.txt").string();
  t.social = (t.dir / "social.txt").string();
  write_interactions(t.interactions, data.interactions);
  write_social(t.social, data.social, data.interactions);
  return t;
}

int count_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  int rows = -1;  // discount the header
  while (std::getline(in, line)) ++rows;
  return rows;
}

RunConfig quick_train_config(const TempDataset& data, const std::string& out) {
  RunConfig c;
  c.interactions = data.interactions;
  c.social = data.social;
  c.out = out;
  c.train.dim = 8;
  c.train.epochs = 4;
  c.train.batch_size = 64;
  c.train.warmup_epoch = 2;
  c.train.patience = 100;
  c.train.lambda = 0.05;
  c.train.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("synth writes one verified pair per target and survives bad targets") {
  const TempDataset data = write_tiny("synth", 21);
  RunConfig c;
  c.interactions = data.interactions;
  c.social = data.social;
  c.out = (data.dir / "out").string();
  c.targets = {0.0, 0.05, 0.9};  // 0.9 is unreachable on this source
  c.range_lo = 20;
  c.range_hi = 24;
  c.avg_degree = 4.0;
  c.train.seed = 3;

  const auto rows = cmd_synth(c);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ok());
  CHECK(rows[0].achieved == 0.0);
  CHECK(rows[1].ok());
  CHECK(std::abs(rows[1].achieved - 0.05) <= 0.02);
  CHECK(!rows[2].ok());  // reported, not fatal
  CHECK(fs::exists(data.dir / "out" / "interactions_hs0.05.txt"));
  CHECK(fs::exists(data.dir / "out" / "social_hs0.05.txt"));
  CHECK(!fs::exists(data.dir / "out" / "social_hs0.9.txt"));
  CHECK(count_rows((data.dir / "out" / "synth_report.csv").string()) == 3);

  // Repeating the command reproduces the files byte for byte.
  RunConfig again = c;
  again.out = (data.dir / "out2").string();
  cmd_synth(again);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(data.dir / "out" / "social_hs0.05.txt") == slurp(data.dir / "out2" / "social_hs0.05.txt"));
}

TEST_CASE("train writes artifacts and eval reproduces the test metrics") {
  const TempDataset data = write_tiny("traineval", 22);
  const RunConfig c = quick_train_config(data, (data.dir / "out").string());
  const TrainOutput out = cmd_train(c);

  for (const char* name : {"history.csv", "rewire.csv", "timings.csv", "checkpoint.bin", "social_best.txt",
                           "social_final.txt", "metrics.txt", "metrics.csv", "manifest.txt"})
    CHECK(fs::exists(data.dir / "out" / name));

  RunConfig e = c;
  e.out = (data.dir / "eval_out").string();
  e.checkpoint = (data.dir / "out" / "checkpoint.bin").string();
  e.rewired_social = (data.dir / "out" / "social_best.txt").string();
  const MetricsReport replay = cmd_eval(e);
  CHECK(replay.recall == Catch::Approx(out.test.recall).margin(1e-12));
  CHECK(replay.precision == Catch::Approx(out.test.precision).margin(1e-12));
  CHECK(replay.ndcg == Catch::Approx(out.test.ndcg).margin(1e-12));
}

TEST_CASE("eval without a checkpoint is rejected") {
  const TempDataset data = write_tiny("evalbad", 23);
  RunConfig c = quick_train_config(data, (data.dir / "out").string());
  c.checkpoint.clear();
  CHECK_THROWS(cmd_eval(c));
}

TEST_CASE("ablate emits the baseline and five variants") {
  const TempDataset data = write_tiny("ablate", 24);
  const RunConfig c = quick_train_config(data, (data.dir / "out").string());
  const auto rows = cmd_ablate(c);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].variant == "baseline");
  CHECK(rows[5].variant == "add-only");
  CHECK(count_rows((data.dir / "out" / "ablate.csv").string()) == 6);
}

TEST_CASE("hs sweep emits one row per level, method and seed") {
  const TempDataset data = write_tiny("sweep", 25);
  RunConfig c = quick_train_config(data, (data.dir / "out").string());
  c.sweep_mode = "hs";
  c.targets = {0.0, 0.05};
  c.range_lo = 20;
  c.range_hi = 24;
  c.avg_degree = 4.0;
  c.repeats = 3;
  const auto rows = cmd_sweep(c);
  CHECK(rows.size() == 2 * 2 * 3);  // levels x {vanilla, share} x seeds
  for (const auto& row : rows) CHECK(row.error.empty());
  CHECK(count_rows((data.dir / "out" / "sweep.csv").string()) == 12);
  CHECK(count_rows((data.dir / "out" / "sweep_summary.csv").string()) == 4);  // one per (level, method)
}

TEST_CASE("zeta sweep varies only the sampling threshold") {
  const TempDataset data = write_tiny("zsweep", 26);
  RunConfig c = quick_train_config(data, (data.dir / "out").string());
  c.sweep_mode = "zeta";
  c.zeta_grid = {0.2, 0.8};
  c.repeats = 2;
  const auto rows = cmd_sweep(c);
  CHECK(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.mode == "zeta");
    CHECK(row.error.empty());
  }
}

TEST_CASE("parallel cells produce exactly the sequential rows") {
  const TempDataset data = write_tiny("psweep", 27);
  RunConfig c = quick_train_config(data, (data.dir / "seq").string());
  c.sweep_mode = "lambda";
  c.lambda_grid = {0.0, 0.1};
  c.repeats = 2;
  const auto sequential = cmd_sweep(c);

  RunConfig p = c;
  p.out = (data.dir / "par").string();
  p.parallel_cells = 3;
  const auto parallel = cmd_sweep(p);

  REQUIRE(sequential.size() == parallel.size());
  for (size_t i = 0; i < sequential.size(); ++i) {
    CHECK(sequential[i].value == parallel[i].value);
    CHECK(sequential[i].seed == parallel[i].seed);
    CHECK(sequential[i].test.ndcg == parallel[i].test.ndcg);
    CHECK(sequential[i].test.recall == parallel[i].test.recall);
  }
  auto slurp = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(data.dir / "seq" / "sweep.csv") == slurp(data.dir / "par" / "sweep.csv"));
}

TEST_CASE("vanilla training through the command equals the no-rewire pipeline") {
  const TempDataset data = write_tiny("vanillacmd", 28);
  RunConfig c = quick_train_config(data, (data.dir / "v1").string());
  c.train.strategy = Strategy::vanilla;
  const TrainOutput vanilla = cmd_train(c);

  RunConfig crippled = c;
  crippled.out = (data.dir / "v2").string();
  crippled.train.strategy = Strategy::share;
  crippled.train.ablation.no_sgr = true;
  crippled.train.lambda = 0.0;
  const TrainOutput equivalent = cmd_train(crippled);
  CHECK(vanilla.test.ndcg == equivalent.test.ndcg);
  CHECK(vanilla.result.best_state.user_base == equivalent.result.best_state.user_base);
}
