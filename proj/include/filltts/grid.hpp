// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "filltts/error.hpp"
#include "filltts/rng.hpp"

namespace filltts {

using Token = std::int32_t;

/// A width x height lattice of token ids generated in row-major order.
///
/// Cells at positions >= frontier hold the sentinel value `vocab_size`, one
/// past the valid range, so that any accidental read of an ungenerated cell
/// is caught by the range checks in the scoring paths.
class TokenGrid {
 public:
  TokenGrid() = default;

  TokenGrid(std::size_t width, std::size_t height, std::size_t vocab_size)
      : width_(width), height_(height), vocab_size_(vocab_size),
        tokens_(width * height, static_cast<Token>(vocab_size)) {
    require(width > 0 && height > 0, ErrorKind::kShape, "grid dimensions must be positive");
    require(vocab_size > 0, ErrorKind::kParameter, "vocab_size must be positive");
  }

  static TokenGrid from_tokens(std::size_t width, std::size_t height, std::size_t vocab_size,
                               std::span<const Token> prefix) {
    TokenGrid grid(width, height, vocab_size);
    require(prefix.size() <= grid.size(), ErrorKind::kCapacity,
            "prefix of " + std::to_string(prefix.size()) + " tokens exceeds grid of " +
                std::to_string(grid.size()));
    for (Token t : prefix) grid.push(t);
    return grid;
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t frontier() const { return frontier_; }
  bool is_complete() const { return frontier_ == tokens_.size(); }
  std::size_t rows_generated() const { return width_ == 0 ? 0 : frontier_ / width_; }
  Token sentinel() const { return static_cast<Token>(vocab_size_); }

  std::span<const Token> generated() const { return {tokens_.data(), frontier_}; }

  Token at(std::size_t index) const {
    require(index < frontier_, ErrorKind::kIncomplete,
            "read of ungenerated cell " + std::to_string(index));
    return tokens_[index];
  }
  Token at(std::size_t row, std::size_t col) const { return at(row * width_ + col); }

  void push(Token token) {
    require(frontier_ < tokens_.size(), ErrorKind::kCapacity, "grid is already complete");
    require(token >= 0 && static_cast<std::size_t>(token) < vocab_size_, ErrorKind::kParameter,
            "token " + std::to_string(token) + " outside vocabulary");
    tokens_[frontier_++] = token;
  }

  /// Drops generated tokens past `frontier` (used to replay prefixes).
  TokenGrid truncated(std::size_t frontier) const {
    require(frontier <= frontier_, ErrorKind::kCapacity, "cannot truncate past the frontier");
    TokenGrid out(width_, height_, vocab_size_);
    for (std::size_t i = 0; i < frontier; ++i) out.tokens_[i] = tokens_[i];
    out.frontier_ = frontier;
    return out;
  }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<Token> tokens_;
  std::size_t frontier_ = 0;
};

/// K-token blocks over a grid: M total, of which the first m are generated.
struct BlockLayout {
  std::size_t block_size = 1;
  std::size_t total_blocks = 0;
  std::size_t generated_blocks = 0;

  std::size_t ungenerated_blocks() const { return total_blocks - generated_blocks; }
  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

inline BlockLayout segment_blocks(std::size_t frontier, std::size_t block_size, std::size_t total) {
  require(block_size >= 1, ErrorKind::kParameter, "block size must be at least 1");
  require(total % block_size == 0, ErrorKind::kAlignment,
          "block size " + std::to_string(block_size) + " does not divide " + std::to_string(total));
  require(frontier <= total, ErrorKind::kAlignment, "frontier beyond grid end");
  require(frontier % block_size == 0, ErrorKind::kAlignment,
          "frontier " + std::to_string(frontier) + " is not a multiple of block size " +
              std::to_string(block_size));
  return {block_size, total / block_size, frontier / block_size};
}

inline BlockLayout segment_blocks(const TokenGrid& grid, std::size_t block_size) {
  return segment_blocks(grid.frontier(), block_size, grid.size());
}

/// Source assignment for every ungenerated block. `sources[j]` is the 0-based
/// generated block copied into block `generated_blocks + j`.
struct FillingScheme {
  std::size_t generated_blocks = 0;
  std::size_t total_blocks = 0;
  std::vector<std::size_t> sources;

  /// FNV-1a over the assignment vector, each entry as 8 little-endian bytes.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t s : sources) {
      auto v = static_cast<std::uint64_t>(s);
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
    return h;
  }

  friend bool operator==(const FillingScheme&, const FillingScheme&) = default;
};

inline FillingScheme random_scheme(std::size_t generated_blocks, std::size_t total_blocks,
                                   Engine& rng) {
  require(generated_blocks >= 1, ErrorKind::kNoSource, "no generated block to fill from");
  require(generated_blocks <= total_blocks, ErrorKind::kParameter,
          "generated blocks exceed total blocks");
  FillingScheme scheme{generated_blocks, total_blocks, {}};
  scheme.sources.reserve(total_blocks - generated_blocks);
  for (std::size_t i = generated_blocks; i < total_blocks; ++i)
    scheme.sources.push_back(uniform_index(rng, generated_blocks));
  return scheme;
}

inline FillingScheme random_scheme(const BlockLayout& layout, Engine& rng) {
  return random_scheme(layout.generated_blocks, layout.total_blocks, rng);
}

/// Completes `grid` by copying generated blocks into the ungenerated slots.
inline TokenGrid apply_filling(const TokenGrid& grid, const FillingScheme& scheme,
                               std::size_t block_size) {
  const BlockLayout layout = segment_blocks(grid, block_size);
  require(scheme.generated_blocks == layout.generated_blocks &&
              scheme.total_blocks == layout.total_blocks &&
              scheme.sources.size() == layout.ungenerated_blocks(),
          ErrorKind::kScheme, "filling scheme does not match the grid's block layout");
  std::vector<Token> tokens(grid.generated().begin(), grid.generated().end());
  tokens.reserve(grid.size());
  for (std::size_t src : scheme.sources) {
    require(src < layout.generated_blocks, ErrorKind::kScheme,
            "source block " + std::to_string(src) + " is not generated");
    const std::size_t begin = src * block_size;
    for (std::size_t k = 0; k < block_size; ++k) tokens.push_back(tokens[begin + k]);
  }
  return TokenGrid::from_tokens(grid.width(), grid.height(), grid.vocab_size(), tokens);
}

// Text record layout:
//   line 1: "filltts-grid 1"
//   line 2: width height vocab_size frontier
//   then the `frontier` generated tokens, whitespace separated, one grid row
//   per line (the last line may be partial).
inline void write_grid(std::ostream& os, const TokenGrid& grid) {
  os << "filltts-grid 1\n"
     << grid.width() << ' ' << grid.height() << ' ' << grid.vocab_size() << ' ' << grid.frontier()
     << '\n';
  const auto gen = grid.generated();
  for (std::size_t i = 0; i < gen.size(); ++i) {
    os << gen[i];
    os << (((i + 1) % grid.width() == 0 || i + 1 == gen.size()) ? '\n' : ' ');
  }
}

inline TokenGrid read_grid(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  require(is && magic == "filltts-grid" && version == 1, ErrorKind::kIo,
          "not a filltts-grid v1 record");
  std::size_t width = 0, height = 0, vocab = 0, frontier = 0;
  is >> width >> height >> vocab >> frontier;
  require(static_cast<bool>(is), ErrorKind::kIo, "truncated grid header");
  std::vector<Token> tokens(frontier);
  for (auto& t : tokens) {
    is >> t;
    require(static_cast<bool>(is), ErrorKind::kIo, "truncated grid body");
  }
  return TokenGrid::from_tokens(width, height, vocab, tokens);
}

inline void save_grid(const std::string& path, const TokenGrid& grid) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  write_grid(os, grid);
}

inline TokenGrid load_grid(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open " + path);
  return read_grid(is);
}

}  // namespace filltts
