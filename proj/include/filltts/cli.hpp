// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filltts/analysis.hpp"
#include "filltts/config.hpp"
#include "filltts/engine.hpp"
#include "filltts/error.hpp"
#include "filltts/experiments.hpp"
#include "filltts/oracle.hpp"
#include "filltts/remote.hpp"
#include "filltts/report.hpp"

namespace filltts::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // invariant violation, I/O, numeric problems
  kUsage = 2,        // bad command line, config or alignment
  kRemote = 3,       // transport or protocol failure talking to the reward server
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kAlignment:
    case ErrorKind::kValidation:
    case ErrorKind::kParameter:
      return kUsage;
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
      return kRemote;
    default:
      return kFailure;
  }
}

/// Options every experiment subcommand accepts.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  void attach(CLI::App& sub) {
    sub.add_option("-c,--config", config_path, "key = value config file");
    sub.add_option("-s,--set", overrides, "override one key (key=value); repeatable");
    sub.add_option("--seed", seed, "master seed (overrides master_seed)");
    sub.add_option("-o,--out", out_dir, "output directory (overrides output_dir)");
  }

  RunConfigFile load() const {
    RunConfigFile cfg = config_path.empty() ? RunConfigFile{} : RunConfigFile::load(config_path);
    for (const auto& o : overrides) cfg.set_assignment(o);
    if (seed) cfg.set("master_seed", std::to_string(*seed));
    if (!out_dir.empty()) cfg.set("output_dir", out_dir);
    cfg.validate_all();
    return cfg;
  }
};

inline std::unique_ptr<RewardOracle> make_oracle(const RunConfigFile& cfg) {
  if (cfg.get("oracle") == "remote")
    return std::make_unique<RemoteOracle>(cfg.remote_policy(), cfg.testbed().codebook);
  return std::make_unique<SyntheticOracle>(cfg.testbed().reward);
}

inline std::filesystem::path prepare_out_dir(const RunConfigFile& cfg) {
  std::filesystem::path dir = cfg.get("output_dir");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (const auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

inline int cmd_run(const CommonOptions& opts, RunMode mode, std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const auto oracle = make_oracle(cfg);
  const auto dir = prepare_out_dir(cfg);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();

  const auto runs = run_prompts(cfg.scaling(), cfg.prompts(), *oracle, mode);
  for (const auto& r : runs)
    require(r.result.oracle_calls == r.expected_calls, ErrorKind::kValidation,
            "oracle budget mismatch for prompt " + std::to_string(r.prompt.class_id) + ": " +
                std::to_string(r.result.oracle_calls) + " calls, expected " +
                std::to_string(r.expected_calls));

  RunMetadata meta{started, std::chrono::system_clock::now(),
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                   oracle->name()};
  const std::string prefix(to_string(mode) == "bon" ? "bon" : "run");
  const auto payload = report_payload(cfg, to_string(mode), runs);
  write_text_file((dir / (prefix + "_report.json")).string(), report_text(payload, metadata_json(meta)));
  {
    std::ostringstream csv;
    write_rewards_csv(csv, cfg.hash(), runs);
    write_text_file((dir / (prefix + "_rewards.csv")).string(), csv.str());
  }
  if (mode == RunMode::kFrTts && cfg.get_bool("record_trials")) {
    std::ostringstream csv;
    write_trials_csv(csv, cfg.hash(), runs);
    write_text_file((dir / (prefix + "_trials.csv")).string(), csv.str());
  }
  double mean_all = 0.0;
  for (const auto& r : runs) mean_all += r.result.mean_score;
  mean_all /= static_cast<double>(runs.size());
  out << to_string(mode) << ": " << runs.size() << " prompts, mean best reward "
      << format_double(mean_best_score(runs)) << ", mean final reward " << format_double(mean_all)
      << ", report " << (dir / (prefix + "_report.json")).string() << "\n";
  return kOk;
}

inline int cmd_correlate(const CommonOptions& opts, const std::string& filling_times, bool with_rollout,
                         std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const auto oracle = make_oracle(cfg);
  const auto dir = prepare_out_dir(cfg);
  const ScalingConfig sc = cfg.scaling();

  std::vector<NamedStrategy> strategies = {cropping_strategy(), zeropad_strategy()};
  if (with_rollout) strategies.push_back(rollout_strategy(sc.rollout_greedy));
  strategies.push_back(filling_strategy(sc.fr));
  for (const auto& v : split_list(filling_times)) {
    FrSearchConfig f = sc.fr;
    f.coarse_trials = parse_count(v, "filling-times");
    f.refine_iters = 0;
    require(f.coarse_trials >= 1, ErrorKind::kConfig, "filling-times values must be at least 1");
    strategies.push_back(filling_strategy(f));
  }

  const CorrelationConfig cc = cfg.correlation();
  const auto table = correlation_experiment(cc, strategies, cfg.prompts(), *oracle);
  const auto path = dir / "correlation.csv";
  std::ostringstream csv;
  write_correlation_csv(csv, table, cfg.hash());
  write_text_file(path.string(), csv.str());

  const auto frontiers = cc.checkpoint_frontier_rows();
  const auto middle = middle_half_checkpoints(frontiers, cc.testbed.height);
  std::vector<std::size_t> all(frontiers.size());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s", "strategy \\ frontier rows");
  out << line;
  for (auto r : frontiers) {
    std::snprintf(line, sizeof line, " %8zu", r);
    out << line;
  }
  out << "      mean\n";
  for (const auto& s : strategies) {
    std::snprintf(line, sizeof line, "%-28s", s.name.c_str());
    out << line;
    for (std::size_t c = 0; c < frontiers.size(); ++c) {
      const auto& rho = table.cell(s.name, c).rho;
      if (rho) std::snprintf(line, sizeof line, " %8.4f", *rho);
      else std::snprintf(line, sizeof line, " %8s", "undef");
      out << line;
    }
    std::snprintf(line, sizeof line, " %9.4f\n", table.mean_rho(s.name, all));
    out << line;
  }
  out << "middle-half checkpoints:";
  for (auto c : middle) out << ' ' << c;
  out << "\ncorrelation table " << path.string() << "\n";
  return kOk;
}

inline int cmd_ablate(const CommonOptions& opts, const std::string& axis_name,
                      const std::vector<std::string>& values, std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const auto oracle = make_oracle(cfg);
  const auto dir = prepare_out_dir(cfg);
  const AblationAxis axis = parse_axis(axis_name);
  std::vector<std::string> flat;
  for (const auto& v : values)
    for (auto& item : split_list(v)) flat.push_back(std::move(item));
  const auto rows = ablate(cfg.scaling(), axis, flat, cfg.prompts(), *oracle);

  const auto path = dir / ("ablation_" + std::string(to_string(axis)) + ".csv");
  std::ostringstream csv;
  write_ablation_csv(csv, cfg.hash(), axis, rows);
  write_text_file(path.string(), csv.str());

  char line[256];
  std::snprintf(line, sizeof line, "%-14s %16s %17s %13s\n", to_string(axis).data(), "mean_best_reward",
                "mean_final_reward", "oracle_calls");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %16.6f %17.6f %13llu\n", r.value.c_str(), r.mean_best_score,
                  r.mean_final_score, static_cast<unsigned long long>(r.oracle_calls));
    out << line;
  }
  out << "ablation table " << path.string() << "\n";
  return kOk;
}

/// Writes a partial grid fixture: prompt `class_id` generated to `rows` rows.
inline int cmd_sample(const CommonOptions& opts, std::int64_t class_id, std::size_t rows,
                      const std::string& path, std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const Testbed tb = cfg.testbed();
  require(rows <= tb.height, ErrorKind::kConfig, "--rows exceeds grid_height");
  const PromptSpec prompt = tb.prompt(class_id);
  const StreamKey stream = StreamKey(cfg.get_u64("master_seed")).child("sample").child(static_cast<std::uint64_t>(class_id));
  const SampleState s = generate_tokens(SampleState(tb.empty_grid(), stream), prompt, rows * tb.width, tb.generator);
  save_grid(path, s.grid);
  out << "wrote " << path << " (" << prompt.text << ", " << rows << " of " << tb.height << " rows)\n";
  return kOk;
}

/// Scores a grid fixture with every intermediate strategy.
inline int cmd_score(const CommonOptions& opts, const std::string& path, std::int64_t class_id,
                     std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const ScalingConfig sc = cfg.scaling();
  const TokenGrid grid = load_grid(path);
  const PromptSpec prompt = sc.testbed.prompt(class_id);
  check_prompt_matches(grid, prompt);
  const auto oracle = make_oracle(cfg);
  const StreamKey stream = StreamKey(sc.master_seed).child("score");
  out << path << ": " << grid.frontier() << " of " << grid.size() << " tokens, prompt " << prompt.text << "\n";
  for (auto strategy : {IntermediateStrategy::kCropping, IntermediateStrategy::kZeroPadding,
                        IntermediateStrategy::kCompleteRollout, IntermediateStrategy::kFillingBased}) {
    ScalingConfig c = sc;
    c.strategy = strategy;
    out << "  " << to_string(strategy) << ": ";
    try {
      out << format_double(intermediate_reward(c, SampleState(grid, stream), prompt, *oracle, stream)) << "\n";
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kProtocol) throw;
      out << "n/a (" << e.what() << ")\n";
    }
  }
  return kOk;
}

inline int cmd_validate(const CommonOptions& opts, std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  out << "config ok, hash " << cfg.hash() << ", expected oracle calls per prompt "
      << expected_oracle_calls(cfg.scaling()) << "\n";
  return kOk;
}

inline int cmd_health(const CommonOptions& opts, std::ostream& out) {
  const RunConfigFile cfg = opts.load();
  const RemotePolicy policy = cfg.remote_policy();
  const HealthInfo info = remote_health(policy);
  out << policy.endpoint << ": status " << info.status << ", model " << info.model << "\n";
  return info.status == "ok" ? kOk : kRemote;
}

/// Parses the command line and runs one subcommand. Diagnostics go to `err`
/// as a single line; the return value is the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"filltts: filling-based reward test-time scaling on a toy token-grid testbed", "filltts"};
  app.require_subcommand(1);

  CommonOptions run_opts, bon_opts, corr_opts, abl_opts, val_opts, health_opts;
  auto* run_cmd = app.add_subcommand("run", "FR-TTS over the configured prompts; writes report JSON and CSV");
  run_opts.attach(*run_cmd);
  auto* bon_cmd = app.add_subcommand("bon", "Best-of-N baseline over the configured prompts");
  bon_opts.attach(*bon_cmd);

  auto* corr_cmd = app.add_subcommand("correlate", "Spearman correlation of intermediate rewards with final reward");
  corr_opts.attach(*corr_cmd);
  std::string filling_times = "1,10";
  bool no_rollout = false;
  corr_cmd->add_option("--filling-times", filling_times,
                       "extra filling variants with T_r = 0, one per T_c value (comma separated)");
  corr_cmd->add_flag("--no-rollout", no_rollout, "skip the complete-rollout strategy");

  auto* abl_cmd = app.add_subcommand("ablate", "sweep one axis and tabulate final rewards");
  abl_opts.attach(*abl_cmd);
  std::string axis;
  std::vector<std::string> values;
  abl_cmd->add_option("--axis", axis, "strategy | block-size | filling-times")->required();
  abl_cmd->add_option("--values", values, "comma separated values of the axis")->required();

  auto* val_cmd = app.add_subcommand("validate-config", "check a config and its alignment constraints");
  val_opts.attach(*val_cmd);
  auto* init_cmd = app.add_subcommand("init-config", "print an annotated config with every default");
  auto* health_cmd = app.add_subcommand("health", "probe the remote reward server");
  health_opts.attach(*health_cmd);

  CommonOptions sample_opts, score_opts;
  std::int64_t class_id = 0;
  std::size_t rows = 0;
  std::string grid_path;
  auto* sample_cmd = app.add_subcommand("sample", "write a partially generated grid fixture");
  sample_opts.attach(*sample_cmd);
  sample_cmd->add_option("--prompt", class_id, "prompt class id")->required();
  sample_cmd->add_option("--rows", rows, "rows to generate")->required();
  sample_cmd->add_option("--grid", grid_path, "fixture path to write")->required();
  auto* score_cmd = app.add_subcommand("score", "score a grid fixture with every intermediate strategy");
  score_opts.attach(*score_cmd);
  score_cmd->add_option("--prompt", class_id, "prompt class id")->required();
  score_cmd->add_option("--grid", grid_path, "fixture path to read")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "filltts: usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, RunMode::kFrTts, out);
    if (*bon_cmd) return cmd_run(bon_opts, RunMode::kBestOfN, out);
    if (*corr_cmd) return cmd_correlate(corr_opts, filling_times, !no_rollout, out);
    if (*abl_cmd) return cmd_ablate(abl_opts, axis, values, out);
    if (*val_cmd) return cmd_validate(val_opts, out);
    if (*init_cmd) {
      out << annotated_default_config();
      return kOk;
    }
    if (*health_cmd) return cmd_health(health_opts, out);
    if (*sample_cmd) return cmd_sample(sample_opts, class_id, rows, grid_path, out);
    if (*score_cmd) return cmd_score(score_opts, grid_path, class_id, out);
  } catch (const Error& e) {
    err << "filltts: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "filltts: internal error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace filltts::cli
