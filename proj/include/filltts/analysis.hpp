// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filltts/engine.hpp"
#include "filltts/error.hpp"
#include "filltts/fr_search.hpp"
#include "filltts/grid.hpp"
#include "filltts/oracle.hpp"
#include "filltts/parallel.hpp"
#include "filltts/strategies.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of the average ranks. A constant input has no rank
/// spread and raises an undefined-correlation error.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorKind::kShape, "spearman inputs differ in length");
  require(xs.size() >= 2, ErrorKind::kInsufficient, "spearman needs at least two pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mean = (static_cast<double>(xs.size()) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::kUndefinedCorrelation,
          "spearman correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Row-stochastic T x T attention weights of one layer.
struct AttentionMap {
  std::size_t layer = 0;
  std::size_t size = 0;
  std::vector<double> weights;  // row-major

  double at(std::size_t i, std::size_t j) const { return weights[i * size + j]; }
};

inline void validate(const AttentionMap& map, double tolerance = 1e-9) {
  require(map.size > 0 && map.weights.size() == map.size * map.size, ErrorKind::kShape,
          "attention map must be T x T");
  for (std::size_t i = 0; i < map.size; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < map.size; ++j) {
      const double a = map.at(i, j);
      require(a >= 0.0 && std::isfinite(a), ErrorKind::kValidation, "negative attention weight");
      sum += a;
    }
    require(std::abs(sum - 1.0) <= tolerance, ErrorKind::kValidation,
            "attention row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

/// Mean per-row Shannon entropy in bits, with 0 log 0 = 0.
inline double attention_entropy(const AttentionMap& map) {
  validate(map);
  double total = 0.0;
  for (double a : map.weights)
    if (a > 0.0) total -= a * std::log2(a);
  return total / static_cast<double>(map.size);
}

// ---------------------------------------------------------------------------
// Correlation study.

/// A fully generated trajectory together with its checkpoint prefixes.
struct Trajectory {
  std::size_t id = 0;
  const PromptSpec* prompt = nullptr;
  TokenGrid final_grid;
  double final_reward = 0.0;
  std::vector<TokenGrid> prefixes;  // one per checkpoint
};

struct EvalContext {
  const Trajectory& trajectory;
  std::size_t checkpoint;
  StreamKey stream;  // shared by every strategy at (trajectory, checkpoint)
  RewardOracle& oracle;
  const Testbed& testbed;

  const TokenGrid& prefix() const { return trajectory.prefixes[checkpoint]; }
  const PromptSpec& prompt() const { return *trajectory.prompt; }
};

/// A named way of scoring an intermediate sample. Strategies observe
/// trajectories; they never influence them.
struct NamedStrategy {
  std::string name;
  std::function<double(const EvalContext&)> evaluate;
};

inline NamedStrategy cropping_strategy() {
  return {"cropping", [](const EvalContext& ctx) {
            return cropping_reward(ctx.prefix(), ctx.prompt(), ctx.oracle, ctx.testbed.codebook);
          }};
}

inline NamedStrategy zeropad_strategy() {
  return {"zeropadding", [](const EvalContext& ctx) {
            return zeropad_reward(ctx.prefix(), ctx.prompt(), ctx.oracle);
          }};
}

inline NamedStrategy rollout_strategy(bool greedy = false) {
  return {"rollout", [greedy](const EvalContext& ctx) {
            SampleState s(ctx.prefix(), ctx.stream);
            return rollout_reward(s, ctx.prompt(), ctx.testbed.generator, ctx.oracle,
                                  ctx.stream.child("rollout"), greedy);
          }};
}

/// Filling-based reward; every FR variant draws its trials from the same
/// stream, so budgets are prefix-nested across variants.
inline NamedStrategy filling_strategy(const FrSearchConfig& cfg, std::string name = "") {
  if (name.empty())
    name = "filling(K=" + std::to_string(cfg.block_size) + ",Tc=" +
           std::to_string(cfg.coarse_trials) + ",Tr=" + std::to_string(cfg.refine_iters) + ")";
  return {std::move(name), [cfg](const EvalContext& ctx) {
            return filling_reward(ctx.prefix(), ctx.prompt(), ctx.oracle, cfg,
                                  ctx.stream.child("fill"));
          }};
}

struct CorrelationCell {
  std::string strategy;
  std::size_t checkpoint = 0;
  std::size_t frontier_rows = 0;
  std::optional<double> rho;  // empty when undefined (constant input)
  std::size_t n = 0;
};

struct CorrelationTable {
  std::vector<CorrelationCell> cells;
  std::vector<Trajectory> trajectories;
  /// values[s][c][b]: strategy s, checkpoint c, trajectory b.
  std::vector<std::vector<std::vector<double>>> values;

  const CorrelationCell& cell(std::string_view strategy, std::size_t checkpoint) const {
    for (const auto& c : cells)
      if (c.strategy == strategy && c.checkpoint == checkpoint) return c;
    fail(ErrorKind::kParameter, "no cell for strategy " + std::string(strategy));
  }

  /// Mean of the defined rho values of one strategy over the given checkpoints.
  double mean_rho(std::string_view strategy, std::span<const std::size_t> checkpoints) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c : checkpoints)
      if (const auto& r = cell(strategy, c).rho) {
        sum += *r;
        ++n;
      }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
  }
};

struct CorrelationConfig {
  Testbed testbed{};
  std::size_t checkpoint_rows = 4;
  std::size_t batch = 200;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;

  std::vector<std::size_t> checkpoint_frontier_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t r = checkpoint_rows; r < testbed.height; r += checkpoint_rows) rows.push_back(r);
    return rows;
  }
};

/// Checkpoints whose frontier lies within the middle half of generation.
inline std::vector<std::size_t> middle_half_checkpoints(const std::vector<std::size_t>& frontier_rows,
                                                        std::size_t height) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < frontier_rows.size(); ++c) {
    const double f = static_cast<double>(frontier_rows[c]) / static_cast<double>(height);
    if (f >= 0.25 && f <= 0.75) out.push_back(c);
  }
  return out;
}

/// Generates `batch` independent trajectories (trajectory b follows prompt
/// b mod |prompts|), lets every strategy score every checkpoint prefix, and
/// tabulates Spearman rho between those scores and the final rewards.
inline CorrelationTable correlation_experiment(const CorrelationConfig& cfg,
                                               const std::vector<NamedStrategy>& strategies,
                                               const std::vector<PromptSpec>& prompts,
                                               RewardOracle& oracle) {
  require(cfg.batch >= 2, ErrorKind::kInsufficient, "correlation needs a batch of at least 2");
  require(!prompts.empty(), ErrorKind::kInsufficient, "correlation needs at least one prompt");
  require(cfg.checkpoint_rows >= 1, ErrorKind::kValidation, "checkpoint_rows must be at least 1");
  const auto frontiers = cfg.checkpoint_frontier_rows();
  const StreamKey root(cfg.master_seed);
  const std::size_t threads = oracle.max_concurrency() == 0
                                  ? cfg.threads
                                  : std::min(std::max<std::size_t>(cfg.threads, 1), oracle.max_concurrency());

  CorrelationTable table;
  table.trajectories.resize(cfg.batch);
  parallel_for(cfg.batch, threads, [&](std::size_t b) {
    Trajectory& t = table.trajectories[b];
    t.id = b;
    t.prompt = &prompts[b % prompts.size()];
    SampleState s(cfg.testbed.empty_grid(), root.child("traj").child(b));
    for (std::size_t rows : frontiers) {
      s = generate_tokens(std::move(s), *t.prompt, rows * cfg.testbed.width - s.grid.frontier(),
                          cfg.testbed.generator);
      t.prefixes.push_back(s.grid);
    }
    s = generate_to_completion(std::move(s), *t.prompt, cfg.testbed.generator);
    t.final_grid = s.grid;
    t.final_reward = oracle.score(t.final_grid, *t.prompt);
  });

  std::vector<double> finals;
  for (const auto& t : table.trajectories) finals.push_back(t.final_reward);

  table.values.assign(strategies.size(),
                      std::vector<std::vector<double>>(frontiers.size(), std::vector<double>(cfg.batch)));
  for (std::size_t si = 0; si < strategies.size(); ++si) {
    parallel_for(cfg.batch, threads, [&](std::size_t b) {
      for (std::size_t c = 0; c < frontiers.size(); ++c) {
        const EvalContext ctx{table.trajectories[b], c, root.child("eval").child(b).child(c), oracle,
                              cfg.testbed};
        table.values[si][c][b] = strategies[si].evaluate(ctx);
      }
    });
    for (std::size_t c = 0; c < frontiers.size(); ++c) {
      CorrelationCell cell{strategies[si].name, c, frontiers[c], std::nullopt, cfg.batch};
      try {
        cell.rho = spearman(table.values[si][c], finals);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kUndefinedCorrelation) throw;
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

/// CSV columns: config_hash,strategy,checkpoint,frontier_rows,rho,n,note.
/// Undefined rho is written as an empty field with note "undefined".
inline void write_correlation_csv(std::ostream& os, const CorrelationTable& table,
                                  std::string_view config_hash) {
  os << "config_hash,strategy,checkpoint,frontier_rows,rho,n,note\n";
  os.precision(17);
  for (const auto& c : table.cells) {
    os << config_hash << ",\"" << c.strategy << "\"," << c.checkpoint << ',' << c.frontier_rows << ',';
    if (c.rho) os << *c.rho;
    os << ',' << c.n << ',' << (c.rho ? "" : "undefined") << '\n';
  }
}

}  // namespace filltts
