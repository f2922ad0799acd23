// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "filltts/diversity.hpp"
#include "filltts/error.hpp"
#include "filltts/fr_search.hpp"
#include "filltts/grid.hpp"
#include "filltts/oracle.hpp"
#include "filltts/parallel.hpp"
#include "filltts/rng.hpp"
#include "filltts/schedule.hpp"
#include "filltts/strategies.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

/// Grid, codec and generator shared by every experiment.
struct Testbed {
  std::size_t width = 16;
  std::size_t height = 16;
  Codebook codebook{16, 4};
  GeneratorParams generator{};
  RewardWeights reward{};

  PromptSpec prompt(std::int64_t class_id) const {
    return make_prompt(class_id, width, height, codebook.vocab_size);
  }
  TokenGrid empty_grid() const { return TokenGrid(width, height, codebook.vocab_size); }
};

/// Schedule parameters as stored in configs: the ramp bounds are fractions of
/// the run's checkpoint count and are resolved to positions per run.
struct ScheduleSettings {
  double begin_fraction = 0.25;
  double end_fraction = 0.60;
  double variance_center = 2.0e-3;
  double variance_sensitivity = 50.0;
  bool variance_on_normalized = false;
  std::optional<double> fixed_weight;  // bypasses schedule and adjustment

  ScheduleConfig resolve(std::size_t total_checkpoints) const {
    const double c = static_cast<double>(total_checkpoints);
    return {begin_fraction * c, end_fraction * c, variance_center, variance_sensitivity};
  }
};

enum class ResampleKernel { kExponential, kLinear };

inline std::string_view to_string(ResampleKernel k) {
  return k == ResampleKernel::kExponential ? "exponential" : "linear";
}

struct ScalingConfig {
  Testbed testbed{};
  std::size_t num_samples = 8;
  std::size_t checkpoint_rows = 4;
  IntermediateStrategy strategy = IntermediateStrategy::kFillingBased;
  FrSearchConfig fr{};
  ScheduleSettings schedule{};
  double resample_temperature = 0.1;
  ResampleKernel resample_kernel = ResampleKernel::kExponential;
  bool elitism = true;
  bool rollout_greedy = false;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  bool record_trials = false;
  bool record_snapshots = false;

  /// Frontiers (in rows) where the population is evaluated and resampled.
  /// The completed grid is not a checkpoint; it goes to final scoring.
  std::vector<std::size_t> checkpoint_frontier_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t r = checkpoint_rows; r < testbed.height; r += checkpoint_rows) rows.push_back(r);
    return rows;
  }
  std::size_t num_checkpoints() const { return checkpoint_frontier_rows().size(); }
};

/// Throws a validation/alignment error describing the first violated constraint.
inline void validate(const ScalingConfig& cfg) {
  const auto& tb = cfg.testbed;
  require(tb.width >= 1 && tb.height >= 1, ErrorKind::kValidation, "grid must be non-empty");
  require(tb.codebook.vocab_size >= 2, ErrorKind::kValidation, "vocab_size must be at least 2");
  require(tb.codebook.patch_size >= 1, ErrorKind::kValidation, "patch_size must be at least 1");
  require(tb.generator.temperature > 0.0, ErrorKind::kValidation, "temperature must be positive");
  require(cfg.num_samples >= 1, ErrorKind::kValidation, "num_samples must be at least 1");
  require(cfg.checkpoint_rows >= 1, ErrorKind::kValidation, "checkpoint_rows must be at least 1");
  require(cfg.resample_temperature > 0.0, ErrorKind::kValidation,
          "resample_temperature must be positive");
  require(cfg.schedule.begin_fraction < cfg.schedule.end_fraction, ErrorKind::kValidation,
          "schedule_begin must be below schedule_end");
  require(cfg.schedule.variance_sensitivity >= 0.0, ErrorKind::kValidation,
          "variance_sensitivity must be non-negative");
  if (cfg.schedule.fixed_weight)
    require(*cfg.schedule.fixed_weight >= 0.0 && *cfg.schedule.fixed_weight <= 1.0,
            ErrorKind::kValidation, "fixed_weight must lie in [0, 1]");
  if (cfg.strategy == IntermediateStrategy::kFillingBased) {
    const std::size_t k = cfg.fr.block_size;
    require(k >= 1, ErrorKind::kValidation, "block_size must be at least 1");
    require((tb.width * tb.height) % k == 0, ErrorKind::kAlignment,
            "block_size " + std::to_string(k) + " does not divide the grid size " +
                std::to_string(tb.width * tb.height));
    require((cfg.checkpoint_rows * tb.width) % k == 0, ErrorKind::kAlignment,
            "checkpoint_rows*width = " + std::to_string(cfg.checkpoint_rows * tb.width) +
                " is not divisible by block_size " + std::to_string(k));
    require(cfg.fr.coarse_trials >= 1, ErrorKind::kValidation, "coarse_trials must be at least 1");
    require(cfg.fr.refine_iters == 0 || cfg.fr.refine_blocks >= 1, ErrorKind::kValidation,
            "refine_blocks must be at least 1");
  }
}

/// Oracle calls one intermediate evaluation of one sample costs.
inline std::uint64_t calls_per_evaluation(const ScalingConfig& cfg) {
  if (cfg.strategy == IntermediateStrategy::kFillingBased)
    return cfg.fr.coarse_trials + cfg.fr.refine_iters;
  return 1;
}

/// checkpoints * N * per-evaluation cost + N final scores.
inline std::uint64_t expected_oracle_calls(const ScalingConfig& cfg) {
  return cfg.num_checkpoints() * cfg.num_samples * calls_per_evaluation(cfg) + cfg.num_samples;
}

struct CheckpointRecord {
  std::size_t index = 0;
  std::size_t frontier_rows = 0;
  std::vector<double> fr_raw;
  std::vector<double> div_raw;
  std::vector<double> fr_norm;
  std::vector<double> div_norm;
  double fr_variance = 0.0;
  double weight = 0.0;           // w before variance adjustment
  double adjusted_weight = 0.0;  // the weight actually used
  std::vector<double> unified;
  std::vector<std::size_t> parents;     // parents[j] = pre-resampling slot cloned into slot j
  std::vector<TokenGrid> snapshots;     // pre-resampling grids, if recorded
  std::vector<std::vector<TrialRecord>> trials;  // per slot, if recorded
};

struct RunResult {
  std::vector<TokenGrid> final_grids;
  std::vector<double> final_scores;
  std::size_t best_index = 0;
  double best_score = 0.0;
  double mean_score = 0.0;
  std::vector<CheckpointRecord> checkpoints;
  std::uint64_t oracle_calls = 0;
  double wall_seconds = 0.0;
};

/// Draws `n` parents with replacement, P(i) proportional to exp(R_u[i] / tau)
/// (or to R_u[i] for the linear kernel). With elitism the first argmax is
/// guaranteed a slot: if no draw picked it, it replaces the draw whose parent
/// has the lowest reward.
inline std::vector<std::size_t> importance_resample(std::span<const double> unified, std::size_t n,
                                                    double temperature, bool elitism, Engine& rng,
                                                    ResampleKernel kernel = ResampleKernel::kExponential) {
  require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::kParameter,
          "resampling temperature must be positive");
  require(!unified.empty(), ErrorKind::kShape, "nothing to resample");
  for (double u : unified) require(std::isfinite(u), ErrorKind::kNumeric, "non-finite reward");

  const auto best = static_cast<std::size_t>(
      std::max_element(unified.begin(), unified.end()) - unified.begin());
  const double top = unified[best];
  std::vector<double> weights(unified.size());
  if (kernel == ResampleKernel::kExponential) {
    for (std::size_t i = 0; i < unified.size(); ++i)
      weights[i] = std::exp((unified[i] - top) / temperature);
  } else {
    const double lo = *std::min_element(unified.begin(), unified.end());
    for (std::size_t i = 0; i < unified.size(); ++i) weights[i] = lo < 0.0 ? unified[i] - lo : unified[i];
    if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
      std::fill(weights.begin(), weights.end(), 1.0);
  }
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  const double total = cdf.back();

  std::vector<std::size_t> parents(n);
  for (auto& p : parents) {
    const double u = uniform01(rng) * total;
    p = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (p >= cdf.size()) {
      p = cdf.size() - 1;
      while (p > 0 && weights[p] <= 0.0) --p;
    }
  }
  if (elitism && n > 0 && std::find(parents.begin(), parents.end(), best) == parents.end()) {
    std::size_t worst = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (unified[parents[j]] < unified[parents[worst]]) worst = j;
    parents[worst] = best;
  }
  return parents;
}

namespace detail {

inline std::size_t effective_threads(const ScalingConfig& cfg, const RewardOracle& oracle) {
  const std::size_t limit = oracle.max_concurrency();
  return limit == 0 ? cfg.threads : std::min(std::max<std::size_t>(cfg.threads, 1), limit);
}

inline StreamKey run_root(const ScalingConfig& cfg, const PromptSpec& prompt) {
  return StreamKey(cfg.master_seed).child(static_cast<std::uint64_t>(prompt.class_id));
}

inline void finish(RunResult& result, std::vector<SampleState>& samples, const PromptSpec& prompt,
                   const ScalingConfig& cfg, RewardOracle& oracle) {
  const std::size_t n = samples.size();
  result.final_scores.assign(n, 0.0);
  parallel_for(n, effective_threads(cfg, oracle), [&](std::size_t j) {
    samples[j] = generate_to_completion(std::move(samples[j]), prompt, cfg.testbed.generator);
    result.final_scores[j] = oracle.score(samples[j].grid, prompt);
  });
  for (auto& s : samples) result.final_grids.push_back(std::move(s.grid));
  result.best_index = static_cast<std::size_t>(
      std::max_element(result.final_scores.begin(), result.final_scores.end()) -
      result.final_scores.begin());
  result.best_score = result.final_scores[result.best_index];
  result.mean_score = std::accumulate(result.final_scores.begin(), result.final_scores.end(), 0.0) /
                      static_cast<double>(n);
}

}  // namespace detail

/// Intermediate reward of one sample under the configured strategy.
inline double intermediate_reward(const ScalingConfig& cfg, const SampleState& sample,
                                  const PromptSpec& prompt, RewardOracle& oracle, StreamKey stream,
                                  std::vector<TrialRecord>* trials = nullptr) {
  switch (cfg.strategy) {
    case IntermediateStrategy::kCropping:
      return cropping_reward(sample.grid, prompt, oracle, cfg.testbed.codebook);
    case IntermediateStrategy::kZeroPadding:
      return zeropad_reward(sample.grid, prompt, oracle);
    case IntermediateStrategy::kCompleteRollout:
      return rollout_reward(sample, prompt, cfg.testbed.generator, oracle, stream.child("rollout"),
                            cfg.rollout_greedy);
    case IntermediateStrategy::kFillingBased: {
      FrResult r = filling_search(sample.grid, prompt, oracle, cfg.fr, stream.child("fill"));
      if (trials) *trials = std::move(r.trial_log);
      return r.best_score;
    }
  }
  fail(ErrorKind::kConfig, "unknown strategy");
}

/// Reward-guided test-time scaling over N parallel trajectories: generate a
/// checkpoint's worth of rows, score each sample (intermediate reward plus
/// diversity under the weighting schedule), resample, repeat; finally score
/// the completed grids.
///
/// Stream layout under root = (master_seed, class_id):
///   gen/j          generation stream of initial slot j
///   eval/c/j       intermediate-reward stream of slot j at checkpoint c
///   resample/c     parent draws at checkpoint c
/// A parent's first clone keeps its generation stream; further clones fork
/// to parent.stream/c/j so that duplicates diverge.
inline RunResult run_fr_tts(const ScalingConfig& cfg, const PromptSpec& prompt, RewardOracle& oracle) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t calls0 = oracle.calls();
  const StreamKey root = detail::run_root(cfg, prompt);
  const std::size_t n = cfg.num_samples;
  const std::size_t threads = detail::effective_threads(cfg, oracle);
  const ToyFeatureExtractor extractor(cfg.testbed.codebook);

  std::vector<SampleState> samples;
  samples.reserve(n);
  for (std::size_t j = 0; j < n; ++j)
    samples.emplace_back(cfg.testbed.empty_grid(), root.child("gen").child(j));

  RunResult result;
  const auto frontiers = cfg.checkpoint_frontier_rows();
  const ScheduleConfig schedule = cfg.schedule.resolve(frontiers.size());

  for (std::size_t c = 0; c < frontiers.size(); ++c) {
    CheckpointRecord rec;
    rec.index = c;
    rec.frontier_rows = frontiers[c];
    rec.fr_raw.assign(n, 0.0);
    if (cfg.record_trials) rec.trials.resize(n);
    const std::size_t target = frontiers[c] * cfg.testbed.width;

    parallel_for(n, threads, [&](std::size_t j) {
      auto& s = samples[j];
      s = generate_tokens(std::move(s), prompt, target - s.grid.frontier(), cfg.testbed.generator);
      rec.fr_raw[j] = intermediate_reward(cfg, s, prompt, oracle, root.child("eval").child(c).child(j),
                                          cfg.record_trials ? &rec.trials[j] : nullptr);
    });

    std::vector<TokenGrid> grids;
    grids.reserve(n);
    for (const auto& s : samples) grids.push_back(s.grid);
    rec.div_raw = diversity_scores(grids, cfg.testbed.codebook, extractor);
    rec.fr_norm = minmax_normalize(rec.fr_raw);
    rec.div_norm = minmax_normalize(rec.div_raw);
    rec.weight = weight_at(c, frontiers.size(), schedule);
    rec.adjusted_weight = rec.weight;
    if (n >= 2) {
      const auto& var_src = cfg.schedule.variance_on_normalized ? rec.fr_norm : rec.fr_raw;
      rec.fr_variance = population_variance(var_src);
      rec.adjusted_weight = variance_adjust(rec.weight, var_src, schedule.v_c, schedule.v_s);
    }
    if (cfg.schedule.fixed_weight) rec.adjusted_weight = *cfg.schedule.fixed_weight;
    rec.unified = unified_rewards(rec.fr_norm, rec.div_norm, rec.adjusted_weight);

    Engine rng = root.child("resample").child(c).engine();
    rec.parents = importance_resample(rec.unified, n, cfg.resample_temperature, cfg.elitism, rng,
                                      cfg.resample_kernel);

    std::vector<SampleState> next;
    next.reserve(n);
    std::vector<bool> taken(n, false);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t p = rec.parents[j];
      SampleState child = samples[p];
      if (taken[p]) {
        child.stream = samples[p].stream.child(c).child(j);
        child.rng = child.stream.engine();
      }
      taken[p] = true;
      child.reward_history.push_back(rec.unified[p]);
      next.push_back(std::move(child));
    }
    if (cfg.record_snapshots) rec.snapshots = std::move(grids);
    samples = std::move(next);
    result.checkpoints.push_back(std::move(rec));
  }

  detail::finish(result, samples, prompt, cfg, oracle);
  result.oracle_calls = oracle.calls() - calls0;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// N independent generations on the same per-slot streams FR-TTS starts from;
/// one oracle call each, keep the best.
inline RunResult run_bon(const ScalingConfig& cfg, const PromptSpec& prompt, RewardOracle& oracle) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t calls0 = oracle.calls();
  const StreamKey root = detail::run_root(cfg, prompt);
  std::vector<SampleState> samples;
  samples.reserve(cfg.num_samples);
  for (std::size_t j = 0; j < cfg.num_samples; ++j)
    samples.emplace_back(cfg.testbed.empty_grid(), root.child("gen").child(j));

  RunResult result;
  detail::finish(result, samples, prompt, cfg, oracle);
  result.oracle_calls = oracle.calls() - calls0;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace filltts
