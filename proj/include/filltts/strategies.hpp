// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/oracle.hpp"
#include "filltts/rng.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

enum class IntermediateStrategy { kCropping, kZeroPadding, kCompleteRollout, kFillingBased };

inline std::string_view to_string(IntermediateStrategy s) {
  switch (s) {
    case IntermediateStrategy::kCropping: return "cropping";
    case IntermediateStrategy::kZeroPadding: return "zeropadding";
    case IntermediateStrategy::kCompleteRollout: return "rollout";
    case IntermediateStrategy::kFillingBased: return "filling";
  }
  return "unknown";
}

inline IntermediateStrategy parse_strategy(std::string_view text) {
  for (auto s : {IntermediateStrategy::kCropping, IntermediateStrategy::kZeroPadding,
                 IntermediateStrategy::kCompleteRollout, IntermediateStrategy::kFillingBased})
    if (to_string(s) == text) return s;
  fail(ErrorKind::kConfig, "unknown strategy '" + std::string(text) +
                               "' (expected cropping, zeropadding, rollout or filling)");
}

/// Score of the generated rows stretched to the full canvas. One oracle call.
inline double cropping_reward(const TokenGrid& grid, const PromptSpec& prompt,
                              RewardOracle& oracle, const Codebook& codebook) {
  return oracle.score(crop_resize_reencode(grid, codebook), prompt);
}

/// Copy of the grid with every ungenerated cell set to token 0.
inline TokenGrid zero_padded(const TokenGrid& grid) {
  TokenGrid padded = grid;
  while (!padded.is_complete()) padded.push(0);
  return padded;
}

/// Score of the zero-padded grid. One oracle call.
inline double zeropad_reward(const TokenGrid& grid, const PromptSpec& prompt, RewardOracle& oracle) {
  return oracle.score(zero_padded(grid), prompt);
}

/// Finishes a copy of the sample on `stream` and scores the completion. The
/// sample itself, including its generation stream, is left untouched.
inline double rollout_reward(const SampleState& sample, const PromptSpec& prompt,
                             const GeneratorParams& params, RewardOracle& oracle, StreamKey stream,
                             bool greedy = false) {
  SampleState clone(sample.grid, stream);
  clone = generate_to_completion(std::move(clone), prompt, params, greedy);
  return oracle.score(clone.grid, prompt);
}

}  // namespace filltts
