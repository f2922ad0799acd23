// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "filltts/error.hpp"

namespace filltts {

/// Mixing weight between the diversity reward (w = 1) and the filling-based
/// reward (w = 0). s_begin and s_end are checkpoint positions; they may be
/// fractional.
struct ScheduleConfig {
  double s_begin = 0.0;
  double s_end = 1.0;
  double v_c = 0.0;   // variance centre
  double v_s = 50.0;  // variance sensitivity
};

/// (v - min) / (max - min); a constant input maps to 0.5 everywhere.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
  require(!values.empty(), ErrorKind::kShape, "cannot normalize an empty vector");
  for (double v : values) require(std::isfinite(v), ErrorKind::kNumeric, "non-finite reward");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.5);
  if (*hi > *lo) {
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  }
  return out;
}

/// 1 before s_begin, 0 after s_end, linear in between.
inline double weight_at(std::size_t checkpoint_index, std::size_t total_checkpoints,
                        const ScheduleConfig& cfg) {
  require(cfg.s_begin < cfg.s_end, ErrorKind::kConfig, "schedule needs s_begin < s_end");
  require(checkpoint_index < total_checkpoints, ErrorKind::kParameter,
          "checkpoint index out of range");
  const double s = static_cast<double>(checkpoint_index);
  if (s <= cfg.s_begin) return 1.0;
  if (s >= cfg.s_end) return 0.0;
  return (cfg.s_end - s) / (cfg.s_end - cfg.s_begin);
}

inline double population_variance(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::kInsufficient, "variance needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Shifts w toward diversity when the FR spread is small:
/// clamp(w - logistic((var - v_c) * v_s) + 0.5, 0, 1).
inline double variance_adjust(double w, std::span<const double> fr_values, double v_c, double v_s) {
  const double var = population_variance(fr_values);
  return std::clamp(w - logistic((var - v_c) * v_s) + 0.5, 0.0, 1.0);
}

inline std::vector<double> unified_rewards(std::span<const double> norm_fr,
                                           std::span<const double> norm_div, double w) {
  require(norm_fr.size() == norm_div.size(), ErrorKind::kShape, "reward vectors differ in length");
  require(w >= 0.0 && w <= 1.0, ErrorKind::kParameter, "weight must lie in [0, 1]");
  std::vector<double> out(norm_fr.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * norm_div[i] + (1.0 - w) * norm_fr[i];
  return out;
}

}  // namespace filltts
