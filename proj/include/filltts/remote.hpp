// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "filltts/error.hpp"
#include "filltts/grid.hpp"
#include "filltts/image.hpp"
#include "filltts/oracle.hpp"
#include "filltts/toy_world.hpp"

namespace filltts {

/// Where and how to reach a reward server.
///
/// Connection failures and 5xx answers are retried `retries` more times with
/// a short linear backoff. Other failures are reported immediately.
struct RemotePolicy {
  std::string endpoint = "http://127.0.0.1:8000";
  int timeout_ms = 10000;
  std::size_t retries = 2;
  int backoff_ms = 50;
};

struct HealthInfo {
  std::string status;
  std::string model;
};

namespace detail {

struct Endpoint {
  std::string host_port;  // "http://host:port" as accepted by httplib::Client
  std::string base_path;  // "" or "/prefix" without a trailing slash
};

inline Endpoint split_endpoint(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  require(url.substr(0, kScheme.size()) == kScheme, ErrorKind::kConfig,
          "remote endpoint must start with http://, got '" + std::string(url) + "'");
  const auto slash = url.find('/', kScheme.size());
  Endpoint ep;
  ep.host_port = std::string(url.substr(0, slash));
  require(ep.host_port.size() > kScheme.size(), ErrorKind::kConfig, "remote endpoint has no host");
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(url.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  return ep;
}

/// Python's json module writes NaN and +-Infinity as bare words. They are
/// rewritten to null outside string literals so that the parse succeeds and
/// the offending entry is reported as a protocol error.
inline std::string neutralize_nonfinite(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < body.size()) out += body[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    bool replaced = false;
    for (std::string_view word : {"-Infinity", "Infinity", "NaN"})
      if (body.substr(i, word.size()) == word) {
        out += "null";
        i += word.size() - 1;
        replaced = true;
        break;
      }
    if (!replaced) out += c;
  }
  return out;
}

inline std::string describe(const httplib::Result& res) {
  if (!res) return "request failed: " + httplib::to_string(res.error());
  std::string msg = "HTTP " + std::to_string(res->status);
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_object() && j.contains("error") && j["error"].is_string())
    msg += ": " + j["error"].get<std::string>();
  else if (j.is_object() && j.contains("detail"))
    msg += ": " + j["detail"].dump();
  return msg;
}

template <typename Send>
httplib::Result with_retries(const RemotePolicy& policy, const std::string& what, Send send) {
  std::string last;
  for (std::size_t attempt = 0; attempt <= policy.retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(policy.backoff_ms * static_cast<int>(attempt)));
    httplib::Result res = send();
    if (res && res->status >= 200 && res->status < 300) return res;
    last = describe(res);
    const bool retryable = !res || res->status >= 500;
    if (!retryable) break;
  }
  fail(ErrorKind::kTransport, what + " " + policy.endpoint + " failed after " +
                                  std::to_string(policy.retries + 1) + " attempt(s): " + last);
}

inline httplib::Client make_client(const RemotePolicy& policy, const Endpoint& ep) {
  httplib::Client cli(ep.host_port);
  require(cli.is_valid(), ErrorKind::kConfig, "invalid remote endpoint '" + policy.endpoint + "'");
  const auto t = std::chrono::milliseconds(policy.timeout_ms);
  cli.set_connection_timeout(t);
  cli.set_read_timeout(t);
  cli.set_write_timeout(t);
  return cli;
}

}  // namespace detail

/// Decodes a /score response body. Structural problems are transport
/// errors; entries that are not finite numbers are protocol errors.
inline std::vector<double> parse_scores(std::string_view body, std::size_t expected) {
  const auto j = nlohmann::json::parse(detail::neutralize_nonfinite(body), nullptr, false);
  require(!j.is_discarded(), ErrorKind::kTransport, "malformed score response (not JSON)");
  require(j.is_object() && j.contains("scores") && j["scores"].is_array(), ErrorKind::kTransport,
          "malformed score response (no \"scores\" array)");
  const auto& arr = j["scores"];
  require(arr.size() == expected, ErrorKind::kTransport,
          "score response has " + std::to_string(arr.size()) + " entries, expected " +
              std::to_string(expected));
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    require(arr[i].is_number(), ErrorKind::kProtocol,
            "score " + std::to_string(i) + " is not a number: " + arr[i].dump());
    const double v = arr[i].get<double>();
    require(std::isfinite(v), ErrorKind::kProtocol, "score " + std::to_string(i) + " is not finite");
    out.push_back(v);
  }
  return out;
}

inline std::string score_request_body(std::span<const Image> images, std::string_view prompt_text) {
  nlohmann::json req;
  req["prompt"] = std::string(prompt_text);
  req["images"] = nlohmann::json::array();
  for (const auto& img : images) req["images"].push_back(base64_encode(encode_png(img)));
  return req.dump();
}

/// Scores a batch in one request; scores come back in request order.
inline std::vector<double> remote_score_batch(std::span<const Image> images, std::string_view prompt_text,
                                              const RemotePolicy& policy) {
  if (images.empty()) return {};
  const auto ep = detail::split_endpoint(policy.endpoint);
  auto cli = detail::make_client(policy, ep);
  const std::string body = score_request_body(images, prompt_text);
  auto res = detail::with_retries(policy, "POST /score", [&] {
    return cli.Post(ep.base_path + "/score", body, "application/json");
  });
  return parse_scores(res->body, images.size());
}

inline double remote_score(const Image& image, std::string_view prompt_text, const RemotePolicy& policy) {
  return remote_score_batch(std::span<const Image>(&image, 1), prompt_text, policy).front();
}

inline HealthInfo remote_health(const RemotePolicy& policy) {
  const auto ep = detail::split_endpoint(policy.endpoint);
  auto cli = detail::make_client(policy, ep);
  auto res = detail::with_retries(policy, "GET /health", [&] { return cli.Get(ep.base_path + "/health"); });
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  require(j.is_object() && j.contains("status") && j["status"].is_string(), ErrorKind::kTransport,
          "malformed health response");
  HealthInfo info{j["status"].get<std::string>(), ""};
  if (j.contains("model") && j["model"].is_string()) info.model = j["model"].get<std::string>();
  return info;
}

/// Oracle backed by a reward server. Grids are decoded to grayscale PNGs;
/// the server sees images and prompt text only. Requests are serialized.
class RemoteOracle final : public RewardOracle {
 public:
  RemoteOracle(RemotePolicy policy, Codebook codebook) : policy_(std::move(policy)), codebook_(codebook) {}

  std::string name() const override { return "remote(" + policy_.endpoint + ")"; }
  std::size_t max_concurrency() const override { return 1; }
  const RemotePolicy& policy() const { return policy_; }

 protected:
  double do_score(const TokenGrid& grid, const PromptSpec& prompt) override {
    return remote_score(decode(grid, codebook_), prompt.text, policy_);
  }

  std::vector<double> do_score_batch(std::span<const TokenGrid> grids, const PromptSpec& prompt) override {
    std::vector<Image> images;
    images.reserve(grids.size());
    for (const auto& g : grids) images.push_back(decode(g, codebook_));
    return remote_score_batch(images, prompt.text, policy_);
  }

 private:
  RemotePolicy policy_;
  Codebook codebook_;
};

}  // namespace filltts
