// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/image.hpp"
#include "filltts/rng.hpp"

// A deterministic stand-in for a pretrained token generator, its VQ codec
// and its reward model. Every quantity here is exactly computable, which is
// what makes the correlation and strategy studies reproducible.

namespace filltts {

/// Gray-level codebook: token v paints a PxP patch of gray v / (V - 1).
struct Codebook {
  std::size_t vocab_size = 16;
  std::size_t patch_size = 4;

  double gray(Token v) const {
    return vocab_size <= 1 ? 0.0 : static_cast<double>(v) / static_cast<double>(vocab_size - 1);
  }

  /// Nearest gray level; exact midpoints go to the smaller token id.
  Token nearest(double g) const {
    if (vocab_size <= 1) return 0;
    const double scaled = std::clamp(g, 0.0, 1.0) * static_cast<double>(vocab_size - 1);
    const auto lo = static_cast<Token>(std::floor(scaled));
    const Token hi = std::min<Token>(lo + 1, static_cast<Token>(vocab_size - 1));
    return (std::abs(g - gray(hi)) < std::abs(g - gray(lo))) ? hi : lo;
  }
};

struct GeneratorParams {
  double alpha = 2.0;        // template attraction
  double beta = 1.0;         // neighbour coherence
  double temperature = 1.0;
};

struct PromptSpec {
  std::int64_t class_id = 0;
  std::string text;
  TokenGrid target;  // complete template grid
};

/// One parallel trajectory: its grid, its private generation stream and the
/// rewards it has been assigned so far.
struct SampleState {
  TokenGrid grid;
  StreamKey stream;
  Engine rng;
  std::vector<double> reward_history;

  SampleState() = default;
  SampleState(TokenGrid g, StreamKey key) : grid(std::move(g)), stream(key), rng(key.engine()) {}
};

inline void check_prompt_matches(const TokenGrid& grid, const PromptSpec& prompt) {
  require(prompt.target.is_complete(), ErrorKind::kIncomplete, "prompt template is incomplete");
  require(prompt.target.width() == grid.width() && prompt.target.height() == grid.height() &&
              prompt.target.vocab_size() == grid.vocab_size(),
          ErrorKind::kShape, "prompt template dimensions differ from the grid");
}

/// Conditional distribution of the next token (cell `grid.frontier()`).
inline std::vector<double> next_token_distribution(const TokenGrid& grid, const PromptSpec& prompt,
                                                   const GeneratorParams& params) {
  require(params.temperature > 0.0, ErrorKind::kParameter, "temperature must be positive");
  require(!grid.is_complete(), ErrorKind::kCapacity, "grid is already complete");
  const std::size_t t = grid.frontier();
  const std::size_t row = t / grid.width();
  const std::size_t col = t % grid.width();
  const std::size_t vocab = grid.vocab_size();

  std::vector<double> logits(vocab, 0.0);
  logits[static_cast<std::size_t>(prompt.target.at(t))] += params.alpha;
  // Only the left and upper neighbours precede t in row-major order.
  std::size_t neighbours = 0;
  std::vector<double> agree(vocab, 0.0);
  if (col > 0) {
    agree[static_cast<std::size_t>(grid.at(t - 1))] += 1.0;
    ++neighbours;
  }
  if (row > 0) {
    agree[static_cast<std::size_t>(grid.at(t - grid.width()))] += 1.0;
    ++neighbours;
  }
  if (neighbours > 0)
    for (std::size_t v = 0; v < vocab; ++v)
      logits[v] += params.beta * agree[v] / static_cast<double>(neighbours);

  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp((l - top) / params.temperature);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return logits;
}

inline Token sample_from(const std::vector<double>& probs, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    acc += probs[v];
    if (u < acc) return static_cast<Token>(v);
  }
  // Rounding left u above the final partial sum; take the last positive entry.
  for (std::size_t v = probs.size(); v-- > 0;)
    if (probs[v] > 0.0) return static_cast<Token>(v);
  return 0;
}

/// Appends `count` tokens to the sample, drawing from its own stream. With
/// `greedy` the most probable token (smallest id on ties) is taken and the
/// stream is not consumed.
inline SampleState generate_tokens(SampleState sample, const PromptSpec& prompt, std::size_t count,
                                   const GeneratorParams& params, bool greedy = false) {
  check_prompt_matches(sample.grid, prompt);
  require(sample.grid.frontier() + count <= sample.grid.size(), ErrorKind::kCapacity,
          "cannot generate " + std::to_string(count) + " tokens past the grid end");
  for (std::size_t i = 0; i < count; ++i) {
    const auto probs = next_token_distribution(sample.grid, prompt, params);
    Token next = 0;
    if (greedy) {
      next = static_cast<Token>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      next = sample_from(probs, sample.rng);
    }
    sample.grid.push(next);
  }
  return sample;
}

inline SampleState generate_to_completion(SampleState sample, const PromptSpec& prompt,
                                          const GeneratorParams& params, bool greedy = false) {
  const std::size_t remaining = sample.grid.size() - sample.grid.frontier();
  return generate_tokens(std::move(sample), prompt, remaining, params, greedy);
}

namespace detail {

inline Image paint(const TokenGrid& grid, std::size_t rows, const Codebook& codebook) {
  const std::size_t p = codebook.patch_size;
  Image image(grid.width() * p, rows * p);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < grid.width(); ++c) {
      const double g = codebook.gray(grid.at(r, c));
      for (std::size_t y = 0; y < p; ++y)
        for (std::size_t x = 0; x < p; ++x) image.at(r * p + y, c * p + x) = g;
    }
  return image;
}

}  // namespace detail

inline Image decode(const TokenGrid& grid, const Codebook& codebook) {
  require(grid.is_complete(), ErrorKind::kIncomplete,
          "decode needs a complete grid; use decode_partial for prefixes");
  require(codebook.patch_size >= 1, ErrorKind::kParameter, "patch size must be at least 1");
  return detail::paint(grid, grid.height(), codebook);
}

/// Decodes only the fully generated rows.
inline Image decode_partial(const TokenGrid& grid, const Codebook& codebook) {
  require(grid.rows_generated() >= 1, ErrorKind::kEmptiness, "no fully generated row");
  require(codebook.patch_size >= 1, ErrorKind::kParameter, "patch size must be at least 1");
  return detail::paint(grid, grid.rows_generated(), codebook);
}

inline TokenGrid encode(const Image& image, const Codebook& codebook) {
  const std::size_t p = codebook.patch_size;
  require(p >= 1 && !image.empty() && image.width % p == 0 && image.height % p == 0,
          ErrorKind::kShape, "image dimensions are not a multiple of the patch size");
  const std::size_t width = image.width / p;
  const std::size_t height = image.height / p;
  std::vector<Token> tokens;
  tokens.reserve(width * height);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double sum = 0.0;
      for (std::size_t y = 0; y < p; ++y)
        for (std::size_t x = 0; x < p; ++x) sum += image.at(r * p + y, c * p + x);
      tokens.push_back(codebook.nearest(sum / static_cast<double>(p * p)));
    }
  return TokenGrid::from_tokens(width, height, codebook.vocab_size, tokens);
}

inline Image resize_nearest(const Image& src, std::size_t width, std::size_t height) {
  require(!src.empty() && width > 0 && height > 0, ErrorKind::kShape, "empty resize");
  Image dst(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = y * src.height / height;
    for (std::size_t x = 0; x < width; ++x) dst.at(y, x) = src.at(sy, x * src.width / width);
  }
  return dst;
}

/// Decodes the generated rows, stretches them to the full canvas and
/// re-encodes, the way a fixed-aspect reward model would see a crop.
inline TokenGrid crop_resize_reencode(const TokenGrid& grid, const Codebook& codebook) {
  require(grid.frontier() % grid.width() == 0, ErrorKind::kAlignment,
          "cropping needs a whole number of generated rows");
  const Image crop = decode_partial(grid, codebook);
  const Image full =
      resize_nearest(crop, grid.width() * codebook.patch_size, grid.height() * codebook.patch_size);
  return encode(full, codebook);
}

struct RewardWeights {
  double match = 0.7;
  double smooth = 0.3;
};

/// match = share of cells equal to the template; smooth = share of
/// horizontally or vertically adjacent pairs holding equal tokens.
inline double synthetic_reward(const TokenGrid& grid, const PromptSpec& prompt,
                               const RewardWeights& weights = {}) {
  require(grid.is_complete(), ErrorKind::kIncomplete, "synthetic reward needs a complete grid");
  check_prompt_matches(grid, prompt);
  const std::size_t w = grid.width(), h = grid.height();
  std::size_t matches = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) matches += grid.at(i) == prompt.target.at(i);

  std::size_t pairs = 0, equal = 0;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      if (c + 1 < w) {
        ++pairs;
        equal += grid.at(r, c) == grid.at(r, c + 1);
      }
      if (r + 1 < h) {
        ++pairs;
        equal += grid.at(r, c) == grid.at(r + 1, c);
      }
    }
  const double match = static_cast<double>(matches) / static_cast<double>(grid.size());
  const double smooth = pairs == 0 ? 1.0 : static_cast<double>(equal) / static_cast<double>(pairs);
  return weights.match * match + weights.smooth * smooth;
}

// ---------------------------------------------------------------------------
// Procedural prompt library.

enum class TemplateKind { kStripes, kBlobs, kGradient, kScene };
inline constexpr std::int64_t kTemplateKinds = 4;

/// Probability that a template's dominant background colour is token 0.
/// Decoded zero padding then coincides with real content for those prompts.
inline constexpr double kDarkShare = 0.25;

inline std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kStripes: return "stripes";
    case TemplateKind::kBlobs: return "blobs";
    case TemplateKind::kGradient: return "gradient";
    case TemplateKind::kScene: return "scene";
  }
  return "unknown";
}

inline TemplateKind template_kind(std::int64_t class_id) {
  return static_cast<TemplateKind>(((class_id % kTemplateKinds) + kTemplateKinds) % kTemplateKinds);
}

/// Builds the template for `class_id`. The family is class_id mod 4; the
/// remaining parameters come from a stream seeded by the id.
inline PromptSpec make_prompt(std::int64_t class_id, std::size_t width, std::size_t height,
                              std::size_t vocab_size) {
  require(vocab_size >= 2, ErrorKind::kParameter, "prompt library needs vocab_size >= 2");
  Engine rng = StreamKey(static_cast<std::uint64_t>(class_id)).child("prompt").engine();
  const auto color = [&] { return static_cast<Token>(uniform_index(rng, vocab_size)); };
  const TemplateKind kind = template_kind(class_id);
  std::vector<Token> cells(width * height, 0);

  switch (kind) {
    case TemplateKind::kStripes: {
      const std::size_t orientation = uniform_index(rng, 3);  // rows, columns, diagonal
      const std::size_t period = 2 + uniform_index(rng, 5);
      const std::size_t n_colors = std::min<std::size_t>(2 + uniform_index(rng, 2), vocab_size);
      std::vector<Token> palette;
      if (uniform01(rng) < kDarkShare) palette.push_back(0);
      while (palette.size() < n_colors) {
        const Token c = color();
        if (std::find(palette.begin(), palette.end(), c) == palette.end()) palette.push_back(c);
      }
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t coord = orientation == 0 ? r : orientation == 1 ? c : r + c;
          cells[r * width + c] = palette[(coord / period) % n_colors];
        }
      break;
    }
    case TemplateKind::kBlobs: {
      const Token background = uniform01(rng) < kDarkShare ? Token{0} : color();
      std::fill(cells.begin(), cells.end(), background);
      const std::size_t n_blobs = 2 + uniform_index(rng, 3);
      const double scale = static_cast<double>(std::min(width, height));
      for (std::size_t b = 0; b < n_blobs; ++b) {
        const double cy = uniform01(rng) * static_cast<double>(height);
        const double cx = uniform01(rng) * static_cast<double>(width);
        const double radius = scale * (0.12 + 0.2 * uniform01(rng));
        const Token fill = color();
        for (std::size_t r = 0; r < height; ++r)
          for (std::size_t c = 0; c < width; ++c) {
            const double dy = static_cast<double>(r) + 0.5 - cy;
            const double dx = static_cast<double>(c) + 0.5 - cx;
            if (dy * dy + dx * dx <= radius * radius) cells[r * width + c] = fill;
          }
      }
      break;
    }
    case TemplateKind::kGradient: {
      const double angle = uniform01(rng) * 2.0 * std::numbers::pi;
      const double lo = uniform01(rng) < kDarkShare ? 0.0 : static_cast<double>(color());
      const double hi = static_cast<double>(color());
      const double dy = std::sin(angle), dx = std::cos(angle);
      double pmin = std::numeric_limits<double>::max(), pmax = std::numeric_limits<double>::lowest();
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
          const double p = dy * static_cast<double>(r) + dx * static_cast<double>(c);
          pmin = std::min(pmin, p);
          pmax = std::max(pmax, p);
        }
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
          const double p = dy * static_cast<double>(r) + dx * static_cast<double>(c);
          const double u = pmax > pmin ? (p - pmin) / (pmax - pmin) : 0.0;
          cells[r * width + c] = static_cast<Token>(std::lround(lo + u * (hi - lo)));
        }
      break;
    }
    case TemplateKind::kScene: {
      // Sky over ground split at a horizon row, with a sun in the sky and
      // objects standing on the ground.
      const Token sky = color();
      Token ground = uniform01(rng) < kDarkShare ? Token{0} : color();
      const auto lo_h = static_cast<std::size_t>(0.3 * static_cast<double>(height));
      const std::size_t horizon = lo_h + uniform_index(rng, std::max<std::size_t>(1, height - 2 * lo_h));
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) cells[r * width + c] = r < horizon ? sky : ground;
      const Token sun = color();
      const double sy = uniform01(rng) * static_cast<double>(horizon);
      const double sx = uniform01(rng) * static_cast<double>(width);
      const double sr = 1.0 + 2.0 * uniform01(rng);
      for (std::size_t r = 0; r < horizon; ++r)
        for (std::size_t c = 0; c < width; ++c) {
          const double dy = static_cast<double>(r) + 0.5 - sy, dx = static_cast<double>(c) + 0.5 - sx;
          if (dy * dy + dx * dx <= sr * sr) cells[r * width + c] = sun;
        }
      const std::size_t n_objects = 1 + uniform_index(rng, 3);
      for (std::size_t o = 0; o < n_objects; ++o) {
        const Token fill = color();
        const std::size_t w = 1 + uniform_index(rng, std::max<std::size_t>(1, width / 4));
        const std::size_t x0 = uniform_index(rng, width - w + 1);
        const std::size_t h = 1 + uniform_index(rng, std::max<std::size_t>(1, horizon / 2));
        const std::size_t top = horizon >= h ? horizon - h : 0;
        const std::size_t depth = 1 + uniform_index(rng, std::max<std::size_t>(1, (height - horizon) / 2));
        const std::size_t bottom = std::min(height, horizon + depth);
        for (std::size_t r = top; r < bottom; ++r)
          for (std::size_t c = x0; c < x0 + w; ++c) cells[r * width + c] = fill;
      }
      break;
    }
  }
  PromptSpec prompt;
  prompt.class_id = class_id;
  prompt.text = std::string(to_string(kind)) + " #" + std::to_string(class_id);
  prompt.target = TokenGrid::from_tokens(width, height, vocab_size, cells);
  return prompt;
}

}  // namespace filltts
