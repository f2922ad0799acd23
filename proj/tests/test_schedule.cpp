// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "filltts/schedule.hpp"
#include "test_util.hpp"

namespace filltts {
namespace {

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

TEST(MinMax, Examples) {
  EXPECT_EQ(minmax_normalize(std::vector<double>{2, 4, 6}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{5, 5, 5}), (std::vector<double>{0.5, 0.5, 0.5}));
}

TEST(MinMax, RangeAndRankPreservation) {
  Engine rng = StreamKey(12).engine();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + uniform_index(rng, 20));
    for (auto& x : v) x = uniform01(rng) * 10.0 - 5.0;
    const auto out = minmax_normalize(v);
    EXPECT_EQ(*std::min_element(out.begin(), out.end()), 0.0);
    EXPECT_EQ(*std::max_element(out.begin(), out.end()), 1.0);
    EXPECT_EQ(argsort(out), argsort(v));
  }
}

TEST(MinMax, Errors) {
  EXPECT_ERROR_KIND(minmax_normalize(std::vector<double>{}), ErrorKind::kShape);
  EXPECT_ERROR_KIND(minmax_normalize(std::vector<double>{1, std::nan("")}), ErrorKind::kNumeric);
  EXPECT_ERROR_KIND(minmax_normalize(std::vector<double>{1, std::numeric_limits<double>::infinity()}),
                    ErrorKind::kNumeric);
}

TEST(Weight, BoundariesAndMidpoint) {
  const ScheduleConfig cfg{1.0, 3.0, 0.0, 50.0};
  EXPECT_EQ(weight_at(0, 5, cfg), 1.0);
  EXPECT_EQ(weight_at(1, 5, cfg), 1.0);
  EXPECT_EQ(weight_at(2, 5, cfg), 0.5);
  EXPECT_EQ(weight_at(3, 5, cfg), 0.0);
  EXPECT_EQ(weight_at(4, 5, cfg), 0.0);
}

TEST(Weight, NonIncreasingForFractionalBounds) {
  const ScheduleConfig cfg{0.25 * 12, 0.6 * 12, 0.0, 50.0};
  double previous = 2.0;
  for (std::size_t s = 0; s < 12; ++s) {
    const double w = weight_at(s, 12, cfg);
    EXPECT_LE(w, previous);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    previous = w;
  }
}

TEST(Weight, Errors) {
  EXPECT_ERROR_KIND(weight_at(0, 3, ScheduleConfig{2.0, 2.0, 0, 1}), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(weight_at(3, 3, ScheduleConfig{0.0, 2.0, 0, 1}), ErrorKind::kParameter);
}

TEST(VarianceAdjust, FixedPointAtTheCentre) {
  const std::vector<double> fr = {0.1, 0.3, 0.2, 0.6};
  const double var = population_variance(fr);
  for (double w : {0.0, 0.25, 0.5, 1.0}) EXPECT_EQ(variance_adjust(w, fr, var, 50.0), w);
}

TEST(VarianceAdjust, LogisticLimits) {
  const std::vector<double> spread = {0.0, 1000.0};
  EXPECT_NEAR(variance_adjust(0.8, spread, 0.0, 50.0), 0.3, 1e-12);
  const std::vector<double> flat = {0.4, 0.4, 0.4};
  EXPECT_NEAR(variance_adjust(0.3, flat, 10.0, 50.0), 0.8, 1e-12);
  EXPECT_EQ(variance_adjust(0.9, flat, 10.0, 50.0), 1.0);
}

TEST(VarianceAdjust, NonIncreasingInVariance) {
  double previous = 2.0;
  for (double scale = 0.0; scale < 3.0; scale += 0.05) {
    const std::vector<double> fr = {0.5 - scale, 0.5, 0.5 + scale};
    const double w = variance_adjust(0.5, fr, 1.0, 3.0);
    EXPECT_LE(w, previous);
    previous = w;
  }
}

TEST(VarianceAdjust, NeedsTwoValues) {
  EXPECT_ERROR_KIND(variance_adjust(0.5, std::vector<double>{0.1}, 0.0, 1.0), ErrorKind::kInsufficient);
  EXPECT_EQ(population_variance(std::vector<double>{1, 3}), 1.0);
}

TEST(Unified, Examples) {
  const std::vector<double> fr = {0.0, 1.0}, div = {1.0, 0.0};
  EXPECT_EQ(unified_rewards(fr, div, 0.5), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(unified_rewards(fr, div, 1.0), div);
  EXPECT_EQ(unified_rewards(fr, div, 0.0), fr);
  EXPECT_ERROR_KIND(unified_rewards(fr, div, 1.5), ErrorKind::kParameter);
  EXPECT_ERROR_KIND(unified_rewards(fr, std::vector<double>{1.0}, 0.5), ErrorKind::kShape);
}

TEST(Unified, BoundedAndFollowsTheActiveTerm) {
  Engine rng = StreamKey(14).engine();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> fr(8), div(8);
    for (auto& x : fr) x = uniform01(rng);
    for (auto& x : div) x = uniform01(rng);
    const auto nf = minmax_normalize(fr), nd = minmax_normalize(div);
    for (double u : unified_rewards(nf, nd, uniform01(rng))) {
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
    }
    EXPECT_EQ(argsort(unified_rewards(nf, nd, 0.0)), argsort(nf));
    EXPECT_EQ(argsort(unified_rewards(nf, nd, 1.0)), argsort(nd));
  }
}

}  // namespace
}  // namespace filltts
