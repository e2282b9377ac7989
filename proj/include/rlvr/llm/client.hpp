// SPDX-License-Identifier: Apache-2.0
//
// Generative verifier access. A JudgeBackend is either a deterministic mock
// or a remote OpenAI-compatible endpoint; both produce Judgments from the
// first generated token of the grading prompt.
#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/core/hash.hpp"
#include "rlvr/core/text.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/llm/cache.hpp"
#include "rlvr/llm/templates.hpp"
#include "rlvr/llm/transport.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr::llm {

struct ClientConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string model_name = "judge";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_inflight = 8;
  int retries = 2;
  std::optional<std::string> cache_path;
  int timeout_seconds = 60;
  int retry_backoff_ms = 200;

  void validate() const {
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (retries < 0) throw ConfigError("retries must be >= 0");
    if (!std::isfinite(temperature) || temperature < 0.0)
      throw ConfigError("temperature must be finite and >= 0");
    if (timeout_seconds < 1) throw ConfigError("timeout_seconds must be >= 1");
    if (retry_backoff_ms < 0) throw ConfigError("retry_backoff_ms must be >= 0");
  }
};

/// Rule-driven stand-in for a judge model. Fully deterministic: the optional
/// noise is a hash of the inputs, the vote index and `seed`.
struct MockJudge {
  enum class Matcher { Substring, Exact, Jaccard };

  Matcher matcher = Matcher::Substring;
  double jaccard_threshold = 0.5;
  double confidence = 0.9;
  double flip_rate = 0.0;
  double invalid_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(confidence)) throw ConfigError("mock confidence must lie in [0, 1]");
    if (!unit(flip_rate) || !unit(invalid_rate) || flip_rate + invalid_rate > 1.0)
      throw ConfigError("mock flip_rate/invalid_rate must be probabilities summing to <= 1");
    if (!unit(jaccard_threshold)) throw ConfigError("jaccard_threshold must lie in [0, 1]");
  }

  bool matches(std::string_view final_step, std::string_view reference) const {
    switch (matcher) {
      case Matcher::Substring: {
        const auto ref = text::normalize(reference);
        return !ref.empty() && text::normalize(final_step).find(ref) != std::string::npos;
      }
      case Matcher::Exact: return text::normalize(final_step) == text::normalize(reference);
      case Matcher::Jaccard:
        return rule_reward_soft(reference, final_step).value() >= jaccard_threshold;
    }
    return false;
  }

  Judgment decide(std::string_view question, std::string_view final_step,
                  std::string_view reference, int sample_index) const {
    bool correct = matches(final_step, reference);
    if (flip_rate > 0.0 || invalid_rate > 0.0) {
      std::uint64_t h = fnv1a64(std::to_string(seed));
      for (std::string_view part : {question, final_step, reference}) {
        h = fnv1a64(part, h);
        h = fnv1a64("\x1f", h);
      }
      h = fnv1a64(std::to_string(sample_index), h);
      const double u = static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
      if (u < invalid_rate) return Judgment{Verdict::Invalid, confidence};
      if (u < invalid_rate + flip_rate) correct = !correct;
    }
    return Judgment{correct ? Verdict::Correct : Verdict::Incorrect, confidence};
  }

  /// First subject whose name occurs in the question or answer, else 999.
  int classify(std::string_view question, std::string_view answer) const {
    const auto hay = text::normalize(std::string(question) + "\n" + std::string(answer));
    for (const auto& s : kSubjects) {
      if (s.id == kUnclassifiedSubject) continue;
      if (hay.find(text::normalize(s.name)) != std::string::npos) return s.id;
    }
    return kUnclassifiedSubject;
  }
};

class RemoteJudge {
 public:
  RemoteJudge(ClientConfig config, std::shared_ptr<ChatTransport> transport,
              std::shared_ptr<JudgmentCache> cache = nullptr)
      : config_(std::move(config)), transport_(std::move(transport)), cache_(std::move(cache)) {
    config_.validate();
    if (!transport_) throw ConfigError("remote judge needs a transport");
  }

  const ClientConfig& config() const noexcept { return config_; }
  ChatTransport& transport() const noexcept { return *transport_; }
  JudgmentCache* cache() const noexcept { return cache_.get(); }

  RemoteJudge with_temperature(double t) const {
    RemoteJudge copy(*this);
    copy.config_.temperature = t;
    copy.config_.validate();
    return copy;
  }

 private:
  ClientConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::shared_ptr<JudgmentCache> cache_;
};

/// HTTP-backed judge built from a config. The bearer token is read from the
/// environment variable named in `api_key_env`; an unset variable means no
/// Authorization header.
inline RemoteJudge make_remote_judge(const ClientConfig& config) {
  config.validate();
  std::string token;
  if (!config.api_key_env.empty()) {
    if (const char* v = std::getenv(config.api_key_env.c_str())) token = v;
  }
  auto transport = std::make_shared<HttpTransport>(config.base_url, std::move(token),
                                                   std::chrono::seconds(config.timeout_seconds));
  auto cache = config.cache_path ? std::make_shared<JudgmentCache>(*config.cache_path)
                                 : std::make_shared<JudgmentCache>();
  return RemoteJudge(config, std::move(transport), std::move(cache));
}

using JudgeBackend = std::variant<MockJudge, RemoteJudge>;

/// Copy whose sampling temperature is `t` (no-op for mocks).
inline JudgeBackend with_temperature(const JudgeBackend& backend, double t) {
  if (const auto* r = std::get_if<RemoteJudge>(&backend)) return r->with_temperature(t);
  return backend;
}

inline int max_inflight(const JudgeBackend& backend) {
  if (const auto* r = std::get_if<RemoteJudge>(&backend)) return r->config().max_inflight;
  return 1;
}

/// YES/1 -> Correct, NO/0 -> Incorrect (case-insensitive, whitespace
/// stripped); anything else -> Invalid.
inline Verdict parse_judgment_token(std::string_view token) {
  const auto t = text::normalize(token);
  if (t == "yes" || t == "1") return Verdict::Correct;
  if (t == "no" || t == "0") return Verdict::Incorrect;
  return Verdict::Invalid;
}

inline nlohmann::json grading_request_body(const ClientConfig& config, const std::string& prompt) {
  return nlohmann::json{
      {"model", config.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config.temperature},
      {"max_tokens", 4},
      {"logprobs", true},
      {"top_logprobs", 1},
  };
}

/// Reads the first generated token and its logprob from a chat-completions
/// reply.
inline Judgment judgment_from_completion(const nlohmann::json& reply) {
  const nlohmann::json* first = nullptr;
  try {
    const auto& choice = reply.at("choices").at(0);
    const auto lp = choice.find("logprobs");
    if (lp == choice.end() || lp->is_null() || !lp->contains("content") ||
        !(*lp)["content"].is_array() || (*lp)["content"].empty())
      throw ProtocolError("completion carries no token logprobs");
    first = &(*lp)["content"][0];
    const auto token = first->at("token").get<std::string>();
    const double logprob = first->at("logprob").get<double>();
    if (std::isnan(logprob) || logprob > 0.0)
      throw ProtocolError("invalid first-token logprob " + std::to_string(logprob));
    return Judgment{parse_judgment_token(token), std::exp(logprob)};
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed completion: ") + e.what());
  }
}

inline std::string completion_text(const nlohmann::json& reply) {
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed completion: ") + e.what());
  }
}

/// Posts with up to `retries` extra attempts on retryable transport errors,
/// doubling the backoff each time.
inline nlohmann::json post_with_retries(const RemoteJudge& remote, const nlohmann::json& body) {
  const auto& cfg = remote.config();
  for (int attempt = 0;; ++attempt) {
    try {
      return remote.transport().post_chat_completion(body);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= cfg.retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.retry_backoff_ms) * (1 << std::min(attempt, 10)));
    }
  }
}

/// Cache key for one vote on one rendered prompt.
inline std::string cache_key(const std::string& prompt, int sample_index) {
  std::uint64_t h = fnv1a64(prompt);
  if (sample_index != 0) h = fnv1a64("\x1fvote=" + std::to_string(sample_index), h);
  return hex64(h);
}

/// One verdict on (question, final step, reference). `sample_index`
/// distinguishes repeated votes on the same input.
inline Judgment judge(const JudgeBackend& backend, std::string_view question,
                      std::string_view final_step, std::string_view reference,
                      int sample_index = 0) {
  if (const auto* mock = std::get_if<MockJudge>(&backend))
    return mock->decide(question, final_step, reference, sample_index);

  const auto& remote = std::get<RemoteJudge>(backend);
  const auto prompt = render_grading_prompt(question, final_step, reference);
  const auto key = cache_key(prompt, sample_index);
  if (auto* cache = remote.cache()) {
    if (auto hit = cache->get(key)) return *hit;
  }
  const auto reply = post_with_retries(remote, grading_request_body(remote.config(), prompt));
  const auto j = judgment_from_completion(reply);
  if (auto* cache = remote.cache()) cache->put(key, j);
  return j;
}

struct JudgeItem {
  std::string question;
  std::string final_step;
  std::string reference;
};

/// Raised when some items of a batch could not be judged. Successful
/// results are still available through `partial()`.
class JudgeBatchError : public Error {
 public:
  JudgeBatchError(std::vector<std::optional<Judgment>> partial, std::vector<std::size_t> failed,
                  const std::string& first_error)
      : Error(make_message(failed, first_error)), partial_(std::move(partial)),
        failed_(std::move(failed)) {}

  const std::vector<std::optional<Judgment>>& partial() const noexcept { return partial_; }
  const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

 private:
  static std::string make_message(const std::vector<std::size_t>& failed,
                                  const std::string& first_error) {
    std::string msg = "judging failed for items";
    for (auto i : failed) msg += " " + std::to_string(i);
    return msg + " (first error: " + first_error + ")";
  }
  std::vector<std::optional<Judgment>> partial_;
  std::vector<std::size_t> failed_;
};

/// Judges every item, returning results in input order. Identical rendered
/// prompts are sent once. At most `max_inflight` requests run concurrently.
inline std::vector<Judgment> judge_many(const JudgeBackend& backend, std::span<const JudgeItem> items,
                                        int sample_index = 0) {
  std::vector<Judgment> out(items.size());
  if (const auto* mock = std::get_if<MockJudge>(&backend)) {
    for (std::size_t i = 0; i < items.size(); ++i)
      out[i] = mock->decide(items[i].question, items[i].final_step, items[i].reference, sample_index);
    return out;
  }

  // Group items by prompt so duplicates share one upstream call.
  std::vector<std::size_t> unique_of(items.size());
  std::vector<std::size_t> representatives;
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto key = cache_key(
          render_grading_prompt(items[i].question, items[i].final_step, items[i].reference),
          sample_index);
      auto [it, inserted] = seen.emplace(key, representatives.size());
      if (inserted) representatives.push_back(i);
      unique_of[i] = it->second;
    }
  }

  std::vector<std::optional<Judgment>> results(representatives.size());
  std::vector<std::string> errors(representatives.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t u = next++; u < representatives.size(); u = next++) {
      const auto& item = items[representatives[u]];
      try {
        results[u] = judge(backend, item.question, item.final_step, item.reference, sample_index);
      } catch (const std::exception& e) {
        errors[u] = e.what();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(max_inflight(backend)),
                                               representatives.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::vector<std::size_t> failed;
  std::string first_error;
  std::vector<std::optional<Judgment>> partial(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& r = results[unique_of[i]];
    if (r) {
      out[i] = *r;
      partial[i] = *r;
    } else {
      if (first_error.empty()) first_error = errors[unique_of[i]];
      failed.push_back(i);
    }
  }
  if (!failed.empty()) throw JudgeBatchError(std::move(partial), std::move(failed), first_error);
  return out;
}

/// First integer in `s` if it is a known subject id, otherwise 999.
inline int parse_subject_id(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == s.size()) return kUnclassifiedSubject;
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j - i > 6) return kUnclassifiedSubject;
  const int id = std::stoi(std::string(s.substr(i, j - i)));
  return find_subject(id) ? id : kUnclassifiedSubject;
}

inline int classify_subject(const JudgeBackend& backend, std::string_view question,
                            std::string_view answer) {
  if (const auto* mock = std::get_if<MockJudge>(&backend)) return mock->classify(question, answer);
  const auto& remote = std::get<RemoteJudge>(backend);
  const auto& cfg = remote.config();
  const nlohmann::json body{
      {"model", cfg.model_name},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", render_classification_prompt(question, answer)}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", 8},
  };
  return parse_subject_id(completion_text(post_with_retries(remote, body)));
}

}  // namespace rlvr::llm
