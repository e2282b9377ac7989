// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"

namespace rlvr::llm {

/// Sends one chat-completions request body and returns the decoded reply.
/// Implementations throw TransportError (retryable or not) on failure and
/// must be safe to call from several threads at once.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual nlohmann::json post_chat_completion(const nlohmann::json& body) = 0;
};

struct ParsedUrl {
  std::string scheme_host_port;  // e.g. "http://localhost:8000"
  std::string path_prefix;       // e.g. "/v1", possibly empty
};

inline ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("unsupported base_url scheme: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("https base_url requires a build with OpenSSL");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  if (out.scheme_host_port.size() <= scheme_end + 3) throw ConfigError("base_url has no host: " + url);
  return out;
}

/// POST {base_url}/chat/completions over cpp-httplib. A fresh client per
/// call keeps the transport thread-safe.
class HttpTransport final : public ChatTransport {
 public:
  HttpTransport(const std::string& base_url, std::string bearer_token,
                std::chrono::seconds timeout = std::chrono::seconds(60))
      : url_(parse_base_url(base_url)), bearer_(std::move(bearer_token)), timeout_(timeout) {}

  nlohmann::json post_chat_completion(const nlohmann::json& body) override {
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);
    const auto path = url_.path_prefix + "/chat/completions";
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError("request to " + url_.scheme_host_port + path +
                               " failed: " + httplib::to_string(res.error()),
                           true);
    }
    if (res->status == 429 || res->status >= 500)
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body, true);
    if (res->status != 200)
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body, false);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
  }

 private:
  ParsedUrl url_;
  std::string bearer_;
  std::chrono::seconds timeout_;
};

}  // namespace rlvr::llm
