// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/oracle.hpp"
#include "filltts/rng.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

struct FrSearchConfig {
  std::size_t coarse_trials = 5;  // best-of-N random schemes
  std::size_t refine_iters = 5;   // accept/reject perturbation steps
  std::size_t refine_blocks = 1;  // slots re-drawn per step
  std::size_t block_size = 8;
  /// Redraw duplicate coarse schemes. The coarse phase then spends
  /// min(coarse_trials, number of distinct schemes) oracle calls.
  bool dedupe = false;
};

enum class TrialPhase { kCoarse, kRefine };

inline std::string_view to_string(TrialPhase p) {
  return p == TrialPhase::kCoarse ? "coarse" : "refine";
}

struct TrialRecord {
  std::size_t index = 0;  // within its phase
  TrialPhase phase = TrialPhase::kCoarse;
  std::uint64_t scheme_hash = 0;
  double score = 0.0;
  bool accepted = false;  // strictly improved the running best
};

struct FrResult {
  FillingScheme best_scheme;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<TrialRecord> trial_log;
};

namespace detail {

// m^(M-m), saturating.
inline std::uint64_t scheme_space_size(const BlockLayout& layout) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < layout.ungenerated_blocks(); ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / layout.generated_blocks)
      return std::numeric_limits<std::uint64_t>::max();
    n *= layout.generated_blocks;
  }
  return n;
}

}  // namespace detail

/// Best of `coarse_trials` random filling schemes. Trial i draws its scheme
/// from `trials.child(i)`, so a larger budget replays every trial of a
/// smaller one and can only raise the result.
inline FrResult coarse_search(const TokenGrid& grid, const PromptSpec& prompt, RewardOracle& oracle,
                              const FrSearchConfig& cfg, StreamKey trials) {
  require(cfg.coarse_trials >= 1, ErrorKind::kParameter, "coarse_trials must be at least 1");
  const BlockLayout layout = segment_blocks(grid, cfg.block_size);
  require(layout.generated_blocks >= 1, ErrorKind::kNoSource, "no generated block to fill from");

  std::size_t budget = cfg.coarse_trials;
  std::unordered_set<std::uint64_t> seen;
  if (cfg.dedupe)
    budget = static_cast<std::size_t>(
        std::min<std::uint64_t>(budget, detail::scheme_space_size(layout)));

  FrResult result;
  for (std::size_t i = 0; i < budget; ++i) {
    Engine rng = trials.child(i).engine();
    FillingScheme scheme = random_scheme(layout, rng);
    if (cfg.dedupe) {
      // Hash collisions are ignored; 64-bit FNV on these sizes is collision free in practice.
      while (!seen.insert(scheme.hash()).second) scheme = random_scheme(layout, rng);
    }
    const double s = oracle.score(apply_filling(grid, scheme, cfg.block_size), prompt);
    const bool better = s > result.best_score;
    result.trial_log.push_back({i, TrialPhase::kCoarse, scheme.hash(), s, better});
    if (better) {
      result.best_score = s;
      result.best_scheme = std::move(scheme);
    }
  }
  return result;
}

/// Zero-order refinement: each step re-draws the source of `refine_blocks`
/// distinct filled slots of the current base and keeps the change only on a
/// strict improvement. Runs nothing when the grid has no slot to refill.
inline FrResult zero_order_refine(const TokenGrid& grid, const PromptSpec& prompt,
                                  RewardOracle& oracle, FrResult base, const FrSearchConfig& cfg,
                                  StreamKey stream) {
  const BlockLayout layout = segment_blocks(grid, cfg.block_size);
  require(base.best_scheme.generated_blocks == layout.generated_blocks &&
              base.best_scheme.total_blocks == layout.total_blocks &&
              base.best_scheme.sources.size() == layout.ungenerated_blocks(),
          ErrorKind::kScheme, "base scheme does not match the grid");
  const std::size_t slots = layout.ungenerated_blocks();
  if (cfg.refine_iters == 0 || slots == 0) return base;
  require(cfg.refine_blocks >= 1, ErrorKind::kParameter, "refine_blocks must be at least 1");
  const std::size_t n_perturb = std::min(cfg.refine_blocks, slots);

  Engine rng = stream.engine();
  std::vector<std::size_t> order(slots);
  for (std::size_t it = 0; it < cfg.refine_iters; ++it) {
    FillingScheme candidate = base.best_scheme;
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < n_perturb; ++k) {
      std::swap(order[k], order[k + uniform_index(rng, slots - k)]);
      candidate.sources[order[k]] = uniform_index(rng, layout.generated_blocks);
    }
    const double s = oracle.score(apply_filling(grid, candidate, cfg.block_size), prompt);
    const bool accepted = s > base.best_score;
    base.trial_log.push_back({it, TrialPhase::kRefine, candidate.hash(), s, accepted});
    if (accepted) {
      base.best_score = s;
      base.best_scheme = std::move(candidate);
    }
  }
  return base;
}

/// Filling-based reward of a partial grid: coarse best-of-N, then zero-order
/// refinement. Costs coarse_trials + refine_iters oracle calls whenever the
/// grid has at least one ungenerated block (coarse_trials when complete).
inline FrResult filling_search(const TokenGrid& grid, const PromptSpec& prompt,
                               RewardOracle& oracle, const FrSearchConfig& cfg, StreamKey stream) {
  FrResult base = coarse_search(grid, prompt, oracle, cfg, stream.child("coarse"));
  return zero_order_refine(grid, prompt, oracle, std::move(base), cfg, stream.child("refine"));
}

inline double filling_reward(const TokenGrid& grid, const PromptSpec& prompt, RewardOracle& oracle,
                             const FrSearchConfig& cfg, StreamKey stream) {
  return filling_search(grid, prompt, oracle, cfg, stream).best_score;
}

}  // namespace filltts
