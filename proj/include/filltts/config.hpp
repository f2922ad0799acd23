// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "filltts/analysis.hpp"
#include "filltts/engine.hpp"
#include "filltts/error.hpp"
#include "filltts/remote.hpp"
#include "filltts/rng.hpp"
#include "filltts/strategies.hpp"

namespace filltts {

struct ConfigKey {
  std::string_view key;
  std::string_view default_value;
  std::string_view doc;
};

// Order here is the canonical order used for echoing and hashing.
inline constexpr ConfigKey kConfigKeys[] = {
    {"grid_width", "16", "grid columns"},
    {"grid_height", "16", "grid rows"},
    {"vocab_size", "16", "number of token ids"},
    {"patch_size", "4", "pixels per token side in decoded images"},
    {"gen_alpha", "2.0", "generator template-attraction logit weight"},
    {"gen_beta", "1.0", "generator neighbour-coherence logit weight"},
    {"gen_temperature", "1.0", "generator sampling temperature"},
    {"reward_match_weight", "0.7", "synthetic reward weight of template agreement"},
    {"reward_smooth_weight", "0.3", "synthetic reward weight of neighbour agreement"},
    {"num_samples", "8", "parallel trajectories N"},
    {"checkpoint_rows", "4", "rows generated between evaluation/resampling steps"},
    {"strategy", "filling", "intermediate reward: filling | zeropadding | cropping | rollout"},
    {"block_size", "8", "tokens per filling block K"},
    {"coarse_trials", "5", "random filling schemes in the coarse phase"},
    {"refine_iters", "5", "zero-order refinement steps"},
    {"refine_blocks", "1", "blocks re-drawn per refinement step"},
    {"dedupe_schemes", "false", "redraw duplicate coarse schemes"},
    {"rollout_greedy", "false", "greedy instead of sampled rollouts"},
    {"schedule_begin", "0.25", "diversity-only phase ends at this fraction of checkpoints"},
    {"schedule_end", "0.60", "filling-only phase starts at this fraction of checkpoints"},
    {"variance_center", "0.002", "FR variance at which the adjustment is neutral"},
    {"variance_sensitivity", "50", "slope of the variance adjustment"},
    {"variance_on_normalized", "false", "measure variance on normalized instead of raw FR"},
    {"fixed_weight", "", "if set, use this diversity weight at every checkpoint"},
    {"resample_temperature", "0.1", "temperature of the exponential resampling kernel"},
    {"resample_kernel", "exponential", "exponential | linear"},
    {"elitism", "true", "always keep the best trajectory when resampling"},
    {"master_seed", "0", "root of every random stream"},
    {"threads", "1", "worker threads (0 = hardware concurrency)"},
    {"diversity_extractor", "toy", "feature extractor for the diversity reward"},
    {"record_trials", "false", "write per-trial filling search logs"},
    {"prompt_first", "0", "first prompt class id"},
    {"prompt_count", "100", "number of prompts (consecutive class ids)"},
    {"correlation_batch", "200", "trajectories in a correlation study"},
    {"output_dir", "out", "directory for reports"},
    {"oracle", "synthetic", "synthetic | remote"},
    {"remote_endpoint", "http://127.0.0.1:8000", "reward server base URL"},
    {"remote_timeout_ms", "10000", "per-request timeout of the remote oracle"},
    {"remote_retries", "2", "extra attempts after a failed remote request"},
};

/// Environment variable that overrides `remote_endpoint`.
inline constexpr const char* kEndpointEnv = "FILLTTS_REWARD_ENDPOINT";

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Flat `key = value` document. Every key has a default; unknown keys and
/// malformed lines are errors. Lines starting with '#' are comments.
class RunConfigFile {
 public:
  RunConfigFile() {
    for (const auto& k : kConfigKeys) values_.emplace_back(std::string(k.key), std::string(k.default_value));
  }

  static RunConfigFile parse(std::string_view text) {
    RunConfigFile cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      require(eq != std::string::npos, ErrorKind::kConfig,
              "line " + std::to_string(lineno) + ": expected key = value");
      cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
  }

  static RunConfigFile load(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorKind::kConfig, "cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  void set(std::string_view key, std::string value) {
    for (auto& [k, v] : values_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    fail(ErrorKind::kConfig, "unknown config key '" + std::string(key) + "'");
  }

  /// Applies a `key=value` override.
  void set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string_view::npos, ErrorKind::kConfig,
            "override '" + std::string(assignment) + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  const std::string& get(std::string_view key) const {
    for (const auto& [k, v] : values_)
      if (k == key) return v;
    fail(ErrorKind::kConfig, "unknown config key '" + std::string(key) + "'");
  }

  std::uint64_t get_u64(std::string_view key) const {
    const std::string& s = get(key);
    require(!s.empty() && s.find_first_not_of("0123456789") == std::string::npos, ErrorKind::kConfig,
            std::string(key) + " must be a non-negative integer, got '" + s + "'");
    errno = 0;
    const auto v = std::strtoull(s.c_str(), nullptr, 10);
    require(errno == 0, ErrorKind::kConfig, std::string(key) + " is out of range");
    return v;
  }
  std::size_t get_size(std::string_view key) const { return static_cast<std::size_t>(get_u64(key)); }

  double get_double(std::string_view key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(!s.empty() && end == s.c_str() + s.size() && std::isfinite(v), ErrorKind::kConfig,
            std::string(key) + " must be a finite number, got '" + s + "'");
    return v;
  }

  bool get_bool(std::string_view key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(ErrorKind::kConfig, std::string(key) + " must be true or false, got '" + s + "'");
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return values_; }

  /// All keys in canonical order as `key = value` lines.
  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  /// 16 hex digits of FNV-1a over canonical_text().
  std::string hash() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t h = fnv1a64(canonical_text());
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    return out;
  }

  Testbed testbed() const {
    Testbed tb;
    tb.width = get_size("grid_width");
    tb.height = get_size("grid_height");
    tb.codebook = {get_size("vocab_size"), get_size("patch_size")};
    tb.generator = {get_double("gen_alpha"), get_double("gen_beta"), get_double("gen_temperature")};
    tb.reward = {get_double("reward_match_weight"), get_double("reward_smooth_weight")};
    return tb;
  }

  ScalingConfig scaling() const {
    ScalingConfig c;
    c.testbed = testbed();
    c.num_samples = get_size("num_samples");
    c.checkpoint_rows = get_size("checkpoint_rows");
    c.strategy = parse_strategy(get("strategy"));
    c.fr.block_size = get_size("block_size");
    c.fr.coarse_trials = get_size("coarse_trials");
    c.fr.refine_iters = get_size("refine_iters");
    c.fr.refine_blocks = get_size("refine_blocks");
    c.fr.dedupe = get_bool("dedupe_schemes");
    c.rollout_greedy = get_bool("rollout_greedy");
    c.schedule.begin_fraction = get_double("schedule_begin");
    c.schedule.end_fraction = get_double("schedule_end");
    c.schedule.variance_center = get_double("variance_center");
    c.schedule.variance_sensitivity = get_double("variance_sensitivity");
    c.schedule.variance_on_normalized = get_bool("variance_on_normalized");
    if (!get("fixed_weight").empty()) c.schedule.fixed_weight = get_double("fixed_weight");
    c.resample_temperature = get_double("resample_temperature");
    const std::string& kernel = get("resample_kernel");
    require(kernel == "exponential" || kernel == "linear", ErrorKind::kConfig,
            "resample_kernel must be exponential or linear");
    c.resample_kernel = kernel == "linear" ? ResampleKernel::kLinear : ResampleKernel::kExponential;
    c.elitism = get_bool("elitism");
    c.master_seed = get_u64("master_seed");
    c.threads = get_size("threads");
    c.record_trials = get_bool("record_trials");
    require(get("diversity_extractor") == "toy", ErrorKind::kConfig,
            "diversity_extractor must be 'toy'");
    const std::string& oracle = get("oracle");
    require(oracle == "synthetic" || oracle == "remote", ErrorKind::kConfig,
            "oracle must be synthetic or remote");
    return c;
  }

  CorrelationConfig correlation() const {
    CorrelationConfig c;
    c.testbed = testbed();
    c.checkpoint_rows = get_size("checkpoint_rows");
    c.batch = get_size("correlation_batch");
    c.master_seed = get_u64("master_seed");
    c.threads = get_size("threads");
    return c;
  }

  std::vector<PromptSpec> prompts() const {
    const Testbed tb = testbed();
    const std::size_t first = get_size("prompt_first");
    const std::size_t count = get_size("prompt_count");
    require(count >= 1, ErrorKind::kConfig, "prompt_count must be at least 1");
    std::vector<PromptSpec> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(tb.prompt(static_cast<std::int64_t>(first + i)));
    return out;
  }

  /// Remote oracle settings; a non-empty FILLTTS_REWARD_ENDPOINT overrides
  /// the configured endpoint.
  RemotePolicy remote_policy() const {
    RemotePolicy p;
    p.endpoint = get("remote_endpoint");
    if (const char* env = std::getenv(kEndpointEnv); env != nullptr && *env != '\0') p.endpoint = env;
    p.timeout_ms = static_cast<int>(std::min<std::uint64_t>(get_u64("remote_timeout_ms"), 3'600'000));
    p.retries = get_size("remote_retries");
    return p;
  }

  /// Parses every typed field and checks the run's alignment constraints.
  void validate_all() const {
    validate(scaling());
    (void)get_size("prompt_count");
    (void)get_size("correlation_batch");
    (void)get_size("remote_timeout_ms");
    (void)get_size("remote_retries");
  }

 private:
  std::vector<std::pair<std::string, std::string>> values_;
};

/// Annotated config listing every key with its default.
inline std::string annotated_default_config() {
  std::string out = "# filltts run configuration. Every key is optional; shown values are the defaults.\n";
  for (const auto& k : kConfigKeys) {
    out += "\n# " + std::string(k.doc) + "\n";
    out += std::string(k.key) + " = " + std::string(k.default_value) + "\n";
  }
  return out;
}

}  // namespace filltts
