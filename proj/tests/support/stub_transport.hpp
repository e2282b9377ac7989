// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/llm/transport.hpp"

namespace rlvr::testing {

/// A chat-completions reply whose first generated token is `token`.
inline nlohmann::json completion_with_token(const std::string& token, double logprob,
                                            const std::string& content = {}) {
  return nlohmann::json{
      {"choices",
       {{{"index", 0},
         {"message", {{"role", "assistant"}, {"content", content.empty() ? token : content}}},
         {"logprobs", {{"content", {{{"token", token}, {"logprob", logprob}, {"top_logprobs", nlohmann::json::array()}}}}}},
         {"finish_reason", "stop"}}}}};
}

/// Scripted transport: `respond` maps a request body to a reply (or throws).
/// Records every request and the peak number of concurrent calls.
class StubTransport : public llm::ChatTransport {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json&, int call_index)>;

  explicit StubTransport(Handler respond) : respond_(std::move(respond)) {}

  nlohmann::json post_chat_completion(const nlohmann::json& body) override {
    const int idx = calls_++;
    const int now = ++inflight_;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    {
      std::lock_guard lock(mutex_);
      bodies_.push_back(body);
    }
    struct Leave {
      std::atomic<int>& n;
      ~Leave() { --n; }
    } leave{inflight_};
    return respond_(body, idx);
  }

  int calls() const { return calls_.load(); }
  int peak_inflight() const { return peak_.load(); }
  std::vector<nlohmann::json> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  Handler respond_;
  std::atomic<int> calls_{0};
  std::atomic<int> inflight_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
};

/// Prompt text of a request body.
inline std::string prompt_of(const nlohmann::json& body) {
  return body.at("messages").at(0).at("content").get<std::string>();
}

/// The "{response}" section of a rendered grading prompt.
inline std::string final_step_of(const std::string& prompt) {
  const std::string open = "**Solution Process (Final Step Only):**  \n";
  const std::string close = "  \n\n**Reference Answer:**";
  const auto a = prompt.find(open) + open.size();
  return prompt.substr(a, prompt.find(close, a) - a);
}

}  // namespace rlvr::testing
