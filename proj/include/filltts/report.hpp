// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "filltts/config.hpp"
#include "filltts/engine.hpp"
#include "filltts/error.hpp"
#include "filltts/fr_search.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

using ordered_json = nlohmann::ordered_json;

/// One prompt's run inside a report.
struct PromptRun {
  PromptSpec prompt;
  RunResult result;
  std::uint64_t expected_calls = 0;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string host_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

inline ordered_json grid_json(const TokenGrid& g) {
  ordered_json j;
  j["width"] = g.width();
  j["height"] = g.height();
  j["tokens"] = std::vector<Token>(g.generated().begin(), g.generated().end());
  return j;
}

inline ordered_json checkpoint_json(const CheckpointRecord& rec) {
  ordered_json j;
  j["index"] = rec.index;
  j["frontier_rows"] = rec.frontier_rows;
  j["weight"] = rec.weight;
  j["adjusted_weight"] = rec.adjusted_weight;
  j["fr_variance"] = rec.fr_variance;
  j["fr_raw"] = rec.fr_raw;
  j["div_raw"] = rec.div_raw;
  j["fr_norm"] = rec.fr_norm;
  j["div_norm"] = rec.div_norm;
  j["unified"] = rec.unified;
  j["parents"] = rec.parents;
  return j;
}

/// Deterministic part of a report: everything except timestamps and host.
inline ordered_json report_payload(const RunConfigFile& config, std::string_view mode,
                                   const std::vector<PromptRun>& runs) {
  ordered_json p;
  p["format"] = "filltts-report 1";
  p["mode"] = mode;
  ordered_json echo = ordered_json::object();
  for (const auto& [k, v] : config.entries()) echo[k] = v;
  p["config"] = std::move(echo);
  p["config_hash"] = config.hash();

  double sum_best = 0.0, sum_mean = 0.0;
  std::uint64_t calls = 0, expected = 0;
  ordered_json arr = ordered_json::array();
  for (const auto& run : runs) {
    const RunResult& r = run.result;
    ordered_json j;
    j["class_id"] = run.prompt.class_id;
    j["prompt"] = run.prompt.text;
    j["best_index"] = r.best_index;
    j["best_score"] = r.best_score;
    j["mean_score"] = r.mean_score;
    j["final_scores"] = r.final_scores;
    j["budget"] = {{"oracle_calls", r.oracle_calls}, {"expected_oracle_calls", run.expected_calls}};
    ordered_json cps = ordered_json::array();
    for (const auto& rec : r.checkpoints) cps.push_back(checkpoint_json(rec));
    j["checkpoints"] = std::move(cps);
    ordered_json genealogy = ordered_json::array();
    for (const auto& rec : r.checkpoints) genealogy.push_back(rec.parents);
    j["genealogy"] = std::move(genealogy);
    j["best_grid"] = grid_json(r.final_grids.at(r.best_index));
    arr.push_back(std::move(j));
    sum_best += r.best_score;
    sum_mean += r.mean_score;
    calls += r.oracle_calls;
    expected += run.expected_calls;
  }
  p["runs"] = std::move(arr);
  const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
  p["summary"] = {{"prompts", runs.size()},
                  {"mean_best_score", sum_best / n},
                  {"mean_mean_score", sum_mean / n},
                  {"oracle_calls", calls},
                  {"expected_oracle_calls", expected}};
  return p;
}

struct RunMetadata {
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
  double wall_seconds = 0.0;
  std::string oracle;
};

inline ordered_json metadata_json(const RunMetadata& m) {
  return {{"started_at", utc_timestamp(m.started)},
          {"finished_at", utc_timestamp(m.finished)},
          {"host", host_name()},
          {"wall_seconds", m.wall_seconds},
          {"oracle", m.oracle}};
}

inline std::string report_text(const ordered_json& payload, const ordered_json& metadata) {
  ordered_json doc;
  doc["payload"] = payload;
  doc["metadata"] = metadata;
  return doc.dump(2) + "\n";
}

/// The payload object of a report document, re-serialized compactly.
inline std::string payload_text(std::string_view report) {
  const auto doc = ordered_json::parse(report, nullptr, false);
  require(!doc.is_discarded() && doc.is_object() && doc.contains("payload"), ErrorKind::kIo,
          "not a filltts report");
  return doc["payload"].dump();
}

/// One row per (prompt, checkpoint, sample) plus one "final" row per sample.
inline void write_rewards_csv(std::ostream& os, const std::string& config_hash,
                              const std::vector<PromptRun>& runs) {
  os << "config_hash,class_id,stage,checkpoint,frontier_rows,sample,fr_raw,div_raw,fr_norm,div_norm,"
        "weight,adjusted_weight,unified,parent,final_score\n";
  for (const auto& run : runs) {
    const RunResult& r = run.result;
    for (const auto& rec : r.checkpoints)
      for (std::size_t j = 0; j < rec.fr_raw.size(); ++j) {
        os << config_hash << ',' << run.prompt.class_id << ",checkpoint," << rec.index << ','
           << rec.frontier_rows << ',' << j << ',' << format_double(rec.fr_raw[j]) << ','
           << format_double(rec.div_raw[j]) << ',' << format_double(rec.fr_norm[j]) << ','
           << format_double(rec.div_norm[j]) << ',' << format_double(rec.weight) << ','
           << format_double(rec.adjusted_weight) << ',' << format_double(rec.unified[j]) << ','
           << rec.parents[j] << ",\n";
      }
    for (std::size_t j = 0; j < r.final_scores.size(); ++j)
      os << config_hash << ',' << run.prompt.class_id << ",final,,," << j << ",,,,,,,,,"
         << format_double(r.final_scores[j]) << '\n';
  }
}

/// Filling-search trial logs (requires record_trials).
inline void write_trials_csv(std::ostream& os, const std::string& config_hash,
                             const std::vector<PromptRun>& runs) {
  os << "config_hash,class_id,sample,checkpoint,trial,phase,scheme_hash,score,accepted\n";
  for (const auto& run : runs)
    for (const auto& rec : run.result.checkpoints)
      for (std::size_t j = 0; j < rec.trials.size(); ++j)
        for (const auto& t : rec.trials[j])
          os << config_hash << ',' << run.prompt.class_id << ',' << j << ',' << rec.index << ','
             << t.index << ',' << to_string(t.phase) << ',' << t.scheme_hash << ','
             << format_double(t.score) << ',' << (t.accepted ? 1 : 0) << '\n';
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot write " + path);
  os << text;
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed for " + path);
}

}  // namespace filltts
