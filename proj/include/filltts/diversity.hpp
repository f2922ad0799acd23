// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/image.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<double> features(const Image& image) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Normalized token histogram of the re-encoded image followed by the 4x4
/// grid of regional mean grays, L2-normalized as a whole. All entries are
/// non-negative, so cosine similarities land in [0, 1].
class ToyFeatureExtractor final : public FeatureExtractor {
 public:
  static constexpr std::size_t kRegions = 4;

  explicit ToyFeatureExtractor(Codebook codebook) : codebook_(codebook) {}

  std::size_t dimension() const override { return codebook_.vocab_size + kRegions * kRegions; }

  std::vector<double> features(const Image& image) const override {
    require(!image.empty(), ErrorKind::kShape, "cannot extract features from an empty image");
    std::vector<double> f(dimension(), 0.0);

    const TokenGrid tokens = encode(image, codebook_);
    for (Token t : tokens.generated()) f[static_cast<std::size_t>(t)] += 1.0;
    for (std::size_t v = 0; v < codebook_.vocab_size; ++v)
      f[v] /= static_cast<double>(tokens.size());

    const auto span_of = [](std::size_t i, std::size_t extent) {
      const std::size_t lo = i * extent / kRegions;
      const std::size_t hi = std::max((i + 1) * extent / kRegions, lo + 1);
      return std::pair{std::min(lo, extent - 1), std::min(hi, extent)};
    };
    for (std::size_t ry = 0; ry < kRegions; ++ry) {
      const auto [y0, y1] = span_of(ry, image.height);
      for (std::size_t rx = 0; rx < kRegions; ++rx) {
        const auto [x0, x1] = span_of(rx, image.width);
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t x = x0; x < x1; ++x) sum += image.at(y, x);
        f[codebook_.vocab_size + ry * kRegions + rx] =
            sum / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }

    double norm = 0.0;
    for (double v : f) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : f) v /= norm;
    return f;
  }

 private:
  Codebook codebook_;
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kShape, "feature length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, ErrorKind::kNumeric, "cosine similarity of a zero vector");
  return dot / std::sqrt(na * nb);
}

/// R_d from precomputed features: for i >= 1, one minus the largest cosine
/// similarity to any earlier sample; sample 0 takes the largest R_d of the
/// rest, and a lone sample gets 1.
inline std::vector<double> diversity_from_features(const std::vector<std::vector<double>>& feats) {
  const std::size_t n = feats.size();
  std::vector<double> rd(n, 1.0);
  if (n <= 1) return rd;
  for (std::size_t i = 1; i < n; ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < i; ++j) best = std::max(best, cosine_similarity(feats[i], feats[j]));
    rd[i] = std::clamp(1.0 - best, 0.0, 1.0);  // rounding can push |cos| past 1
  }
  rd[0] = *std::max_element(rd.begin() + 1, rd.end());
  return rd;
}

/// Diversity rewards for a population sharing one frontier; features are taken
/// from the decoded generated rows only.
inline std::vector<double> diversity_scores(std::span<const TokenGrid> grids,
                                            const Codebook& codebook,
                                            const FeatureExtractor& extractor) {
  std::vector<std::vector<double>> feats;
  feats.reserve(grids.size());
  for (const auto& g : grids) {
    require(g.frontier() == grids.front().frontier(), ErrorKind::kValidation,
            "diversity needs samples with a common frontier");
    feats.push_back(extractor.features(decode_partial(g, codebook)));
  }
  return diversity_from_features(feats);
}

}  // namespace filltts
