// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>

#include "filltts/config.hpp"
#include "test_util.hpp"

namespace filltts {
namespace {

TEST(ConfigFile, ParsesCommentsAndWhitespace) {
  const auto cfg = RunConfigFile::parse("# comment\n\n  num_samples =  12 \nstrategy=cropping\r\n");
  EXPECT_EQ(cfg.get("num_samples"), "12");
  EXPECT_EQ(cfg.get_size("num_samples"), 12u);
  EXPECT_EQ(cfg.get("strategy"), "cropping");
  EXPECT_EQ(cfg.get("block_size"), "8");
}

TEST(ConfigFile, RejectsMalformedInput) {
  EXPECT_ERROR_KIND(RunConfigFile::parse("num_samples 12\n"), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("samples = 12\n"), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("num_samples = -1\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("gen_alpha = fast\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("gen_alpha = nan\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("elitism = maybe\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("strategy = padding\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("oracle = magic\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::parse("resample_kernel = cubic\n").scaling(), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(RunConfigFile::load("/nonexistent/filltts.conf"), ErrorKind::kConfig);
}

TEST(ConfigFile, ValidationReportsAlignment) {
  EXPECT_ERROR_KIND(RunConfigFile::parse("block_size = 12\n").validate_all(), ErrorKind::kAlignment);
  EXPECT_ERROR_KIND(RunConfigFile::parse("num_samples = 0\n").validate_all(), ErrorKind::kValidation);
  EXPECT_NO_THROW(RunConfigFile().validate_all());
}

TEST(ConfigFile, OverridesUseKeyEqualsValue) {
  RunConfigFile cfg;
  cfg.set_assignment("coarse_trials = 9");
  EXPECT_EQ(cfg.scaling().fr.coarse_trials, 9u);
  EXPECT_ERROR_KIND(cfg.set_assignment("coarse_trials"), ErrorKind::kConfig);
  EXPECT_ERROR_KIND(cfg.set_assignment("no_such_key=1"), ErrorKind::kConfig);
}

TEST(ConfigFile, HashIsFnvOfTheCanonicalText) {
  RunConfigFile cfg;
  char expected[17];
  std::snprintf(expected, sizeof expected, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.canonical_text())));
  EXPECT_EQ(cfg.hash(), expected);
  const auto reordered = RunConfigFile::parse("strategy = filling\nnum_samples = 8\n");
  EXPECT_EQ(reordered.hash(), cfg.hash());
  cfg.set("master_seed", "1");
  EXPECT_NE(cfg.hash(), reordered.hash());
}

TEST(ConfigFile, AnnotatedDefaultsRoundTrip) {
  const std::string text = annotated_default_config();
  const auto cfg = RunConfigFile::parse(text);
  EXPECT_EQ(cfg.canonical_text(), RunConfigFile().canonical_text());
  for (const auto& key : kConfigKeys) EXPECT_NE(text.find(std::string(key.key) + " = "), std::string::npos);
}

TEST(ConfigFile, MapsOntoTheScalingConfig) {
  const auto cfg = RunConfigFile::parse(
      "grid_width = 8\ngrid_height = 12\nvocab_size = 4\nnum_samples = 3\ncheckpoint_rows = 3\n"
      "block_size = 4\nrefine_blocks = 2\nfixed_weight = 0.25\nresample_kernel = linear\nelitism = no\n"
      "master_seed = 77\nschedule_begin = 0.1\nschedule_end = 0.9\n");
  const auto s = cfg.scaling();
  EXPECT_EQ(s.testbed.width, 8u);
  EXPECT_EQ(s.testbed.height, 12u);
  EXPECT_EQ(s.testbed.codebook.vocab_size, 4u);
  EXPECT_EQ(s.num_samples, 3u);
  EXPECT_EQ(s.num_checkpoints(), 3u);
  EXPECT_EQ(s.fr.block_size, 4u);
  EXPECT_EQ(s.fr.refine_blocks, 2u);
  EXPECT_EQ(s.schedule.fixed_weight, 0.25);
  EXPECT_EQ(s.resample_kernel, ResampleKernel::kLinear);
  EXPECT_FALSE(s.elitism);
  EXPECT_EQ(s.master_seed, 77u);
  const auto resolved = s.schedule.resolve(s.num_checkpoints());
  EXPECT_DOUBLE_EQ(resolved.s_begin, 0.3);
  EXPECT_DOUBLE_EQ(resolved.s_end, 2.7);
  EXPECT_FALSE(RunConfigFile().scaling().schedule.fixed_weight.has_value());

  const auto prompts = RunConfigFile::parse("prompt_first = 5\nprompt_count = 3\n").prompts();
  ASSERT_EQ(prompts.size(), 3u);
  EXPECT_EQ(prompts.front().class_id, 5);
  EXPECT_EQ(prompts.back().class_id, 7);
}

TEST(ConfigFile, EndpointEnvironmentOverride) {
  RunConfigFile cfg;
  cfg.set("remote_endpoint", "http://example.invalid:9");
  cfg.set("remote_timeout_ms", "99999999999");
  ::unsetenv(kEndpointEnv);
  EXPECT_EQ(cfg.remote_policy().endpoint, "http://example.invalid:9");
  EXPECT_EQ(cfg.remote_policy().timeout_ms, 3'600'000);
  ::setenv(kEndpointEnv, "http://127.0.0.1:1234", 1);
  EXPECT_EQ(cfg.remote_policy().endpoint, "http://127.0.0.1:1234");
  ::setenv(kEndpointEnv, "", 1);
  EXPECT_EQ(cfg.remote_policy().endpoint, "http://example.invalid:9");
  ::unsetenv(kEndpointEnv);
}

TEST(ConfigFile, ShippedConfigsValidate) {
  const auto defaults = RunConfigFile::load(std::string(FILLTTS_CONFIG_DIR) + "/default.conf");
  EXPECT_EQ(defaults.hash(), RunConfigFile().hash());
  const auto quick = RunConfigFile::load(std::string(FILLTTS_CONFIG_DIR) + "/quick.conf");
  EXPECT_NO_THROW(quick.validate_all());
  EXPECT_EQ(quick.get_size("prompt_count"), 10u);
}

}  // namespace
}  // namespace filltts
