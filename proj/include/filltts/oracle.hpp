// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

/// A reward model over complete grids. Every call goes through score() or
/// score_batch(), which count it; subclasses implement do_score().
class RewardOracle {
 public:
  virtual ~RewardOracle() = default;

  double score(const TokenGrid& grid, const PromptSpec& prompt) {
    require(grid.is_complete(), ErrorKind::kIncomplete, "oracles only score complete grids");
    calls_.fetch_add(1, std::memory_order_relaxed);
    const double s = do_score(grid, prompt);
    require(std::isfinite(s), ErrorKind::kProtocol, "oracle returned a non-finite score");
    return s;
  }

  std::vector<double> score_batch(std::span<const TokenGrid> grids, const PromptSpec& prompt) {
    for (const auto& g : grids)
      require(g.is_complete(), ErrorKind::kIncomplete, "oracles only score complete grids");
    calls_.fetch_add(grids.size(), std::memory_order_relaxed);
    auto scores = do_score_batch(grids, prompt);
    require(scores.size() == grids.size(), ErrorKind::kProtocol, "oracle returned wrong batch size");
    for (double s : scores)
      require(std::isfinite(s), ErrorKind::kProtocol, "oracle returned a non-finite score");
    return scores;
  }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

  /// Number of score() calls that may be in flight at once; 0 means no limit.
  virtual std::size_t max_concurrency() const { return 0; }
  virtual std::string name() const = 0;

 protected:
  virtual double do_score(const TokenGrid& grid, const PromptSpec& prompt) = 0;
  virtual std::vector<double> do_score_batch(std::span<const TokenGrid> grids,
                                             const PromptSpec& prompt) {
    std::vector<double> out;
    out.reserve(grids.size());
    for (const auto& g : grids) out.push_back(do_score(g, prompt));
    return out;
  }

 private:
  std::atomic<std::uint64_t> calls_{0};
};

class SyntheticOracle final : public RewardOracle {
 public:
  explicit SyntheticOracle(RewardWeights weights = {}) : weights_(weights) {}
  std::string name() const override { return "synthetic"; }
  const RewardWeights& weights() const { return weights_; }

 protected:
  double do_score(const TokenGrid& grid, const PromptSpec& prompt) override {
    return synthetic_reward(grid, prompt, weights_);
  }

 private:
  RewardWeights weights_;
};

}  // namespace filltts
