// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "filltts/grid.hpp"
#include "test_util.hpp"

namespace filltts {
namespace {

using testing::random_grid;

TEST(SegmentBlocks, PaperScaleExamples) {
  EXPECT_EQ(segment_blocks(96, 12, 576), (BlockLayout{12, 48, 8}));
  EXPECT_EQ(segment_blocks(576, 12, 576), (BlockLayout{12, 48, 48}));
  EXPECT_ERROR_KIND(segment_blocks(90, 12, 576), ErrorKind::kAlignment);
}

TEST(SegmentBlocks, RejectsBadBlockSizes) {
  EXPECT_ERROR_KIND(segment_blocks(0, 0, 16), ErrorKind::kParameter);
  EXPECT_ERROR_KIND(segment_blocks(6, 3, 16), ErrorKind::kAlignment);
  EXPECT_ERROR_KIND(segment_blocks(20, 4, 16), ErrorKind::kAlignment);
}

TEST(SegmentBlocks, EmptyFrontierHasNoGeneratedBlocks) {
  const auto layout = segment_blocks(0, 4, 16);
  EXPECT_EQ(layout.generated_blocks, 0u);
  EXPECT_EQ(layout.ungenerated_blocks(), 4u);
}

TEST(RandomScheme, SingleSourceFillsEverythingFromIt) {
  Engine rng = StreamKey(1).engine();
  const auto s = random_scheme(1, 4, rng);
  EXPECT_EQ(s.sources, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(RandomScheme, CompleteLayoutGivesEmptyScheme) {
  Engine rng = StreamKey(1).engine();
  EXPECT_TRUE(random_scheme(5, 5, rng).sources.empty());
}

TEST(RandomScheme, NoGeneratedBlockIsAnError) {
  Engine rng = StreamKey(1).engine();
  EXPECT_ERROR_KIND(random_scheme(0, 4, rng), ErrorKind::kNoSource);
}

TEST(RandomScheme, PerSlotSourcesAreUniform) {
  Engine rng = StreamKey(2024).engine();
  std::vector<std::vector<std::size_t>> counts(4, std::vector<std::size_t>(4, 0));
  for (int d = 0; d < 100000; ++d) {
    const auto s = random_scheme(4, 8, rng);
    for (std::size_t slot = 0; slot < 4; ++slot) ++counts[slot][s.sources[slot]];
  }
  for (const auto& c : counts) EXPECT_LT(testing::chi_square_uniform(c), testing::chi_square_99(3));
}

TEST(SchemeHash, IsOrderSensitiveFnvOverLittleEndianWords) {
  FillingScheme a{2, 4, {0, 1}};
  FillingScheme b{2, 4, {1, 0}};
  EXPECT_NE(a.hash(), b.hash());
  // Independent evaluation: bytes 00*8 then 01 00*7.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const unsigned char bytes[16] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  EXPECT_EQ(a.hash(), h);
}

TEST(ApplyFilling, CopiesSingleTokens) {
  const std::vector<Token> prefix = {5, 7};
  const auto g = TokenGrid::from_tokens(2, 2, 8, prefix);
  const auto out = apply_filling(g, FillingScheme{2, 4, {0, 1}}, 1);
  EXPECT_EQ(std::vector<Token>(out.generated().begin(), out.generated().end()),
            (std::vector<Token>{5, 7, 5, 7}));
}

TEST(ApplyFilling, CopiesBlocks) {
  const std::vector<Token> prefix = {1, 2, 3, 4};
  const auto g = TokenGrid::from_tokens(2, 4, 8, prefix);
  const auto out = apply_filling(g, FillingScheme{2, 4, {1, 0}}, 2);
  EXPECT_EQ(std::vector<Token>(out.generated().begin(), out.generated().end()),
            (std::vector<Token>{1, 2, 3, 4, 3, 4, 1, 2}));
}

TEST(ApplyFilling, CompleteGridWithEmptySchemeIsIdentity) {
  Engine rng = StreamKey(9).engine();
  const auto g = random_grid(4, 4, 5, 16, rng);
  EXPECT_EQ(apply_filling(g, FillingScheme{4, 4, {}}, 4), g);
}

TEST(ApplyFilling, MismatchedSchemeIsRejected) {
  Engine rng = StreamKey(9).engine();
  const auto g = random_grid(4, 4, 5, 8, rng);
  EXPECT_ERROR_KIND(apply_filling(g, FillingScheme{2, 4, {0}}, 4), ErrorKind::kScheme);
  EXPECT_ERROR_KIND(apply_filling(g, FillingScheme{2, 4, {0, 2}}, 4), ErrorKind::kScheme);
  EXPECT_ERROR_KIND(apply_filling(g, FillingScheme{2, 4, {0, 1}}, 3), ErrorKind::kAlignment);
}

// Property: the output is complete, keeps the prefix and every filled block
// is a verbatim copy of its source block.
TEST(ApplyFilling, PreservesPrefixAndCopiesSourcesVerbatim) {
  Engine rng = StreamKey(77).engine();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = std::size_t{1} << uniform_index(rng, 3);  // 1, 2, 4
    const std::size_t total_blocks = 16 * 8 / k;
    const std::size_t m = 1 + uniform_index(rng, total_blocks);
    const auto g = random_grid(16, 8, 6, m * k, rng);
    const auto scheme = random_scheme(m, total_blocks, rng);
    const auto out = apply_filling(g, scheme, k);
    ASSERT_TRUE(out.is_complete());
    EXPECT_EQ(segment_blocks(out, k).generated_blocks, total_blocks);
    for (std::size_t i = 0; i < g.frontier(); ++i) ASSERT_EQ(out.at(i), g.at(i));
    for (std::size_t j = 0; j < scheme.sources.size(); ++j)
      for (std::size_t t = 0; t < k; ++t)
        ASSERT_EQ(out.at((m + j) * k + t), g.at(scheme.sources[j] * k + t));
  }
}

TEST(TokenGrid, UngeneratedCellsAreNotReadable) {
  const std::vector<Token> prefix = {1, 2, 3};
  const auto g = TokenGrid::from_tokens(2, 2, 4, prefix);
  EXPECT_EQ(g.at(1, 0), 3);
  EXPECT_ERROR_KIND(g.at(3), ErrorKind::kIncomplete);
  EXPECT_EQ(g.sentinel(), 4);
  EXPECT_EQ(g.rows_generated(), 1u);
}

TEST(TokenGrid, PushIsRangeChecked) {
  TokenGrid g(1, 1, 3);
  EXPECT_ERROR_KIND(g.push(3), ErrorKind::kParameter);
  EXPECT_ERROR_KIND(g.push(-1), ErrorKind::kParameter);
  g.push(2);
  EXPECT_TRUE(g.is_complete());
  EXPECT_ERROR_KIND(g.push(0), ErrorKind::kCapacity);
  EXPECT_ERROR_KIND(TokenGrid(0, 3, 2), ErrorKind::kShape);
}

TEST(TokenGrid, TruncationKeepsThePrefix) {
  Engine rng = StreamKey(4).engine();
  const auto g = random_grid(4, 4, 3, 12, rng);
  const auto t = g.truncated(5);
  EXPECT_EQ(t.frontier(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(t.at(i), g.at(i));
  EXPECT_ERROR_KIND(g.truncated(13), ErrorKind::kCapacity);
}

TEST(GridRecord, RoundTripsThroughText) {
  Engine rng = StreamKey(8).engine();
  for (std::size_t frontier : {0u, 5u, 16u, 24u}) {
    const auto g = random_grid(4, 6, 9, frontier, rng);
    std::stringstream ss;
    write_grid(ss, g);
    EXPECT_EQ(read_grid(ss), g);
  }
}

TEST(GridRecord, DocumentedLayout) {
  const std::vector<Token> prefix = {1, 2, 3, 4, 5};
  std::stringstream ss;
  write_grid(ss, TokenGrid::from_tokens(2, 3, 6, prefix));
  EXPECT_EQ(ss.str(), "filltts-grid 1\n2 3 6 5\n1 2\n3 4\n5\n");
}

TEST(GridRecord, MalformedInputIsAnIoError) {
  std::stringstream bad_magic("grid 1\n1 1 2 0\n");
  EXPECT_ERROR_KIND(read_grid(bad_magic), ErrorKind::kIo);
  std::stringstream truncated("filltts-grid 1\n2 2 4 3\n1 2\n");
  EXPECT_ERROR_KIND(read_grid(truncated), ErrorKind::kIo);
  std::stringstream out_of_vocab("filltts-grid 1\n2 2 4 1\n9\n");
  EXPECT_ERROR_KIND(read_grid(out_of_vocab), ErrorKind::kParameter);
}

TEST(GridRecord, LoadsCheckedInFixture) {
  const auto g = load_grid(std::string(FILLTTS_FIXTURE_DIR) + "/stripes_half.grid");
  EXPECT_EQ(g.width(), 16u);
  EXPECT_EQ(g.height(), 16u);
  EXPECT_EQ(g.frontier(), 128u);
}

}  // namespace
}  // namespace filltts
