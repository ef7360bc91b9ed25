#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sharerec/rng.hpp"
#include "sharerec/trainer.hpp"

namespace sharerec {

/// Fully resolved run settings: defaults, then config-file entries, then
/// command-line flags, later wins. Serialized into the run manifest, which is
/// itself a loadable config file.
struct RunConfig {
  std::string interactions;
  std::string social;
  std::string out = "out";
  double threshold = 0.0;
  int bins = 50;

  double train_ratio = 0.8;
  double val_ratio = 0.1;
  double test_ratio = 0.1;

  TrainConfig train;

  std::vector<double> targets = {0.05, 0.1, 0.2, 0.4};
  Index range_lo = 590;
  Index range_hi = 600;
  double avg_degree = 0.0;  // 0: match the source social graph's average degree
  int repeats = 5;
  std::string sweep_mode = "hs";  // hs | zeta | lambda
  std::vector<double> zeta_grid = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<double> lambda_grid = {1.0, 0.5, 0.1, 0.01, 1e-3, 1e-4};
  int parallel_cells = 1;

  std::string checkpoint;
  std::string rewired_social;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || value.empty())
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty())
    throw std::invalid_argument("config: bad integer for " + key + ": '" + value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + value + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string tok;
  std::istringstream ss(value);
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(parse_double(key, tok));
  }
  return out;
}

inline std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_list;
  if (key == "interactions") c.interactions = value;
  else if (key == "social") c.social = value;
  else if (key == "out") c.out = value;
  else if (key == "threshold") c.threshold = parse_double(key, value);
  else if (key == "bins") c.bins = static_cast<int>(parse_int(key, value));
  else if (key == "train_ratio") c.train_ratio = parse_double(key, value);
  else if (key == "val_ratio") c.val_ratio = parse_double(key, value);
  else if (key == "test_ratio") c.test_ratio = parse_double(key, value);
  else if (key == "backbone") c.train.backbone = backbone_from_string(value);
  else if (key == "epochs") c.train.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch") c.train.batch_size = static_cast<Index>(parse_int(key, value));
  else if (key == "learning_rate") c.train.learning_rate = parse_double(key, value);
  else if (key == "dim") c.train.dim = static_cast<Index>(parse_int(key, value));
  else if (key == "layers") c.train.layers = static_cast<int>(parse_int(key, value));
  else if (key == "encoder_layers") c.train.encoder_layers = static_cast<int>(parse_int(key, value));
  else if (key == "zeta") c.train.zeta = parse_double(key, value);
  else if (key == "lambda") c.train.lambda = parse_double(key, value);
  else if (key == "tau") c.train.tau = parse_double(key, value);
  else if (key == "l2") c.train.l2 = parse_double(key, value);
  else if (key == "strategy") c.train.strategy = strategy_from_string(value);
  else if (key == "warmup") c.train.warmup_epoch = static_cast<int>(parse_int(key, value));
  else if (key == "ablation") c.train.ablation = ablations_from_string(value);
  else if (key == "seed") c.train.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "patience") c.train.patience = static_cast<int>(parse_int(key, value));
  else if (key == "exact_cl") c.train.exact_cl = parse_bool(key, value);
  else if (key == "separate_encoder") c.train.separate_encoder_table = parse_bool(key, value);
  else if (key == "per_user_cap") c.train.per_user_cap = static_cast<int>(parse_int(key, value));
  else if (key == "eval_k") c.train.eval_k = static_cast<int>(parse_int(key, value));
  else if (key == "targets") c.targets = parse_list(key, value);
  else if (key == "range_lo") c.range_lo = static_cast<Index>(parse_int(key, value));
  else if (key == "range_hi") c.range_hi = static_cast<Index>(parse_int(key, value));
  else if (key == "avg_degree") c.avg_degree = parse_double(key, value);
  else if (key == "repeats") c.repeats = static_cast<int>(parse_int(key, value));
  else if (key == "sweep_mode") c.sweep_mode = value;
  else if (key == "zeta_grid") c.zeta_grid = parse_list(key, value);
  else if (key == "lambda_grid") c.lambda_grid = parse_list(key, value);
  else if (key == "parallel_cells") c.parallel_cells = static_cast<int>(parse_int(key, value));
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "rewired_social") c.rewired_social = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline std::string ablations_to_string(const Ablations& a) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(a.no_sgr, "no-sgr");
  add(a.no_hra, "no-hra");
  add(a.no_sw, "no-sw");
  add(a.cut_only, "cut-only");
  add(a.add_only, "add-only");
  return out.empty() ? "none" : out;
}

/// Every setting, in a fixed order, as loadable "key = value" entries.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  using detail::join_list;
  const auto& t = c.train;
  return {
      {"interactions", c.interactions},
      {"social", c.social},
      {"out", c.out},
      {"threshold", format_double(c.threshold)},
      {"bins", std::to_string(c.bins)},
      {"train_ratio", format_double(c.train_ratio)},
      {"val_ratio", format_double(c.val_ratio)},
      {"test_ratio", format_double(c.test_ratio)},
      {"backbone", t.backbone == BackboneKind::generic ? "generic" : "lightgcn-social"},
      {"epochs", std::to_string(t.epochs)},
      {"batch", std::to_string(t.batch_size)},
      {"learning_rate", format_double(t.learning_rate)},
      {"dim", std::to_string(t.dim)},
      {"layers", std::to_string(t.layers)},
      {"encoder_layers", std::to_string(t.encoder_layers)},
      {"zeta", format_double(t.zeta)},
      {"lambda", format_double(t.lambda)},
      {"tau", format_double(t.tau)},
      {"l2", format_double(t.l2)},
      {"strategy", to_string(t.strategy)},
      {"warmup", std::to_string(t.warmup_epoch)},
      {"ablation", ablations_to_string(t.ablation)},
      {"seed", std::to_string(t.seed)},
      {"patience", std::to_string(t.patience)},
      {"exact_cl", t.exact_cl ? "true" : "false"},
      {"separate_encoder", t.separate_encoder_table ? "true" : "false"},
      {"per_user_cap", std::to_string(t.per_user_cap)},
      {"eval_k", std::to_string(t.eval_k)},
      {"targets", join_list(c.targets)},
      {"range_lo", std::to_string(c.range_lo)},
      {"range_hi", std::to_string(c.range_hi)},
      {"avg_degree", format_double(c.avg_degree)},
      {"repeats", std::to_string(c.repeats)},
      {"sweep_mode", c.sweep_mode},
      {"zeta_grid", join_list(c.zeta_grid)},
      {"lambda_grid", join_list(c.lambda_grid)},
      {"parallel_cells", std::to_string(c.parallel_cells)},
      {"checkpoint", c.checkpoint},
      {"rewired_social", c.rewired_social},
  };
}

/// Line-oriented "key = value" file. '#' starts a comment; blank lines are
/// skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  long line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' on line " + std::to_string(line_no) + " of " + path);
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return entries;
}

/// defaults <- file entries <- flag entries, later wins.
inline RunConfig resolve_config(const std::vector<std::pair<std::string, std::string>>& file_entries,
                                const std::vector<std::pair<std::string, std::string>>& flag_entries) {
  RunConfig c;
  for (const auto& [k, v] : file_entries) apply_setting(c, k, v);
  for (const auto& [k, v] : flag_entries) apply_setting(c, k, v);
  return c;
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = static_cast<size_t>(in.gcount());
    for (size_t i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

/// The manifest is a config file annotated with the command and input hashes,
/// so `<command> --config manifest.txt` reproduces the run.
inline void write_manifest(const std::string& path, const std::string& command, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << "# sharerec run manifest\n";
  out << "# command = " << command << "\n";
  for (const auto* file : {&c.interactions, &c.social}) {
    if (file->empty()) continue;
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash_file(*file)));
    out << "# input_hash " << *file << " = " << hex << "\n";
  }
  for (const auto& [k, v] : config_entries(c)) out << k << " = " << v << "\n";
}

}  // namespace sharerec
