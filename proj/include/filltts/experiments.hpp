// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filltts/engine.hpp"
#include "filltts/error.hpp"
#include "filltts/report.hpp"
#include "filltts/strategies.hpp"

namespace filltts {

enum class RunMode { kFrTts, kBestOfN };

inline std::string_view to_string(RunMode m) { return m == RunMode::kFrTts ? "fr-tts" : "bon"; }

/// Runs one method over every prompt, in order.
inline std::vector<PromptRun> run_prompts(const ScalingConfig& cfg, const std::vector<PromptSpec>& prompts,
                                          RewardOracle& oracle, RunMode mode) {
  validate(cfg);
  std::vector<PromptRun> runs;
  runs.reserve(prompts.size());
  for (const auto& p : prompts) {
    PromptRun r{p, mode == RunMode::kFrTts ? run_fr_tts(cfg, p, oracle) : run_bon(cfg, p, oracle), 0};
    r.expected_calls = mode == RunMode::kFrTts ? expected_oracle_calls(cfg) : cfg.num_samples;
    runs.push_back(std::move(r));
  }
  return runs;
}

inline double mean_best_score(const std::vector<PromptRun>& runs) {
  double s = 0.0;
  for (const auto& r : runs) s += r.result.best_score;
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

// ---------------------------------------------------------------------------
// Paired comparison.

struct PairedComparison {
  std::size_t n = 0;
  std::size_t wins = 0;  // a > b
  std::size_t losses = 0;
  std::size_t ties = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double relative_improvement = 0.0;  // (mean_a - mean_b) / |mean_b|
  double p_value = 1.0;               // one-sided sign test, ties dropped
};

/// P(X >= wins) for X ~ Binomial(trials, 1/2).
inline double sign_test_upper_tail(std::size_t wins, std::size_t trials) {
  require(wins <= trials, ErrorKind::kParameter, "more wins than trials");
  if (trials == 0) return 1.0;
  double p = 0.0;
  for (std::size_t k = wins; k <= trials; ++k)
    p += std::exp(std::lgamma(static_cast<double>(trials) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                  std::lgamma(static_cast<double>(trials - k) + 1.0) -
                  static_cast<double>(trials) * std::log(2.0));
  return std::min(p, 1.0);
}

inline PairedComparison compare_paired(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kShape, "paired samples differ in length");
  require(!a.empty(), ErrorKind::kInsufficient, "paired comparison needs at least one pair");
  PairedComparison c;
  c.n = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.mean_a += a[i];
    c.mean_b += b[i];
    if (a[i] > b[i]) ++c.wins;
    else if (a[i] < b[i]) ++c.losses;
    else ++c.ties;
  }
  c.mean_a /= static_cast<double>(c.n);
  c.mean_b /= static_cast<double>(c.n);
  c.relative_improvement = c.mean_b == 0.0 ? 0.0 : (c.mean_a - c.mean_b) / std::abs(c.mean_b);
  c.p_value = sign_test_upper_tail(c.wins, c.wins + c.losses);
  return c;
}

// ---------------------------------------------------------------------------
// One-axis ablations.

enum class AblationAxis { kStrategy, kBlockSize, kFillingTimes };

inline AblationAxis parse_axis(std::string_view s) {
  if (s == "strategy") return AblationAxis::kStrategy;
  if (s == "block-size") return AblationAxis::kBlockSize;
  if (s == "filling-times") return AblationAxis::kFillingTimes;
  fail(ErrorKind::kConfig, "unknown ablation axis '" + std::string(s) +
                               "' (expected strategy, block-size or filling-times)");
}

inline std::string_view to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::kStrategy: return "strategy";
    case AblationAxis::kBlockSize: return "block-size";
    case AblationAxis::kFillingTimes: return "filling-times";
  }
  return "unknown";
}

inline std::size_t parse_count(std::string_view s, std::string_view what) {
  require(!s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos, ErrorKind::kConfig,
          std::string(what) + " value '" + std::string(s) + "' is not a non-negative integer");
  return static_cast<std::size_t>(std::stoull(std::string(s)));
}

struct AblationPoint {
  std::string value;
  RunMode mode = RunMode::kFrTts;
  ScalingConfig config;
};

/// Configuration for one ablation value. Block size accepts "row" for the
/// grid width; filling times sets T_c; strategy also accepts "bon".
inline AblationPoint ablation_point(const ScalingConfig& base, AblationAxis axis, std::string_view value) {
  AblationPoint pt{std::string(value), RunMode::kFrTts, base};
  switch (axis) {
    case AblationAxis::kStrategy:
      if (value == "bon") pt.mode = RunMode::kBestOfN;
      else pt.config.strategy = parse_strategy(value);
      break;
    case AblationAxis::kBlockSize:
      pt.config.fr.block_size = value == "row" ? base.testbed.width : parse_count(value, "block-size");
      break;
    case AblationAxis::kFillingTimes:
      pt.config.fr.coarse_trials = parse_count(value, "filling-times");
      break;
  }
  validate(pt.config);
  return pt;
}

struct AblationRow {
  std::string value;
  double mean_best_score = 0.0;
  double mean_final_score = 0.0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t expected_oracle_calls = 0;
  double wall_seconds = 0.0;
};

/// Runs every value over the same prompts and master seed. Streams are keyed
/// by name, so two values differ only in what the axis changes.
inline std::vector<AblationRow> ablate(const ScalingConfig& base, AblationAxis axis,
                                       const std::vector<std::string>& values,
                                       const std::vector<PromptSpec>& prompts, RewardOracle& oracle) {
  require(!values.empty(), ErrorKind::kConfig, "ablation needs at least one value");
  std::vector<AblationPoint> points;
  for (const auto& v : values) points.push_back(ablation_point(base, axis, v));

  std::vector<AblationRow> rows;
  for (const auto& pt : points) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = run_prompts(pt.config, prompts, oracle, pt.mode);
    AblationRow row{pt.value, mean_best_score(runs), 0.0, 0, 0, 0.0};
    for (const auto& r : runs) {
      row.mean_final_score += r.result.mean_score;
      row.oracle_calls += r.result.oracle_calls;
      row.expected_oracle_calls += r.expected_calls;
    }
    row.mean_final_score /= static_cast<double>(runs.size());
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_ablation_csv(std::ostream& os, std::string_view config_hash, AblationAxis axis,
                               const std::vector<AblationRow>& rows) {
  os << "config_hash,axis,value,mean_best_score,mean_final_score,oracle_calls,expected_oracle_calls\n";
  for (const auto& r : rows)
    os << config_hash << ',' << to_string(axis) << ',' << r.value << ',' << format_double(r.mean_best_score) << ','
       << format_double(r.mean_final_score) << ',' << r.oracle_calls << ',' << r.expected_oracle_calls
       << '\n';
}

}  // namespace filltts
