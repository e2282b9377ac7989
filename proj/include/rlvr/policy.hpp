// SPDX-License-Identifier: Apache-2.0
//
// Toy autoregressive policy: one independent categorical distribution per
// (prompt feature, answer position). Small enough for exact gradients,
// large enough to exercise every piece of the RL machinery.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rlvr/core/error.hpp"
#include "rlvr/core/hash.hpp"
#include "rlvr/core/random.hpp"
#include "rlvr/core/text.hpp"

namespace rlvr {

using TokenId = int;

/// Index 0 is always the end-of-answer token.
inline constexpr TokenId kEndToken = 0;
inline constexpr std::string_view kEndTokenText = "</s>";

class Vocabulary {
 public:
  /// Builds a vocabulary from answer tokens; the end token is prepended.
  /// `separator` is placed between tokens when decoding (empty for
  /// character-level vocabularies, " " for word-level ones).
  static Vocabulary from_tokens(const std::vector<std::string>& answer_tokens,
                                std::string separator = "") {
    std::vector<std::string> all;
    all.reserve(answer_tokens.size() + 1);
    all.emplace_back(kEndTokenText);
    all.insert(all.end(), answer_tokens.begin(), answer_tokens.end());
    return Vocabulary(std::move(all), std::move(separator));
  }

  /// `tokens` must already start with the end token.
  Vocabulary(std::vector<std::string> tokens, std::string separator)
      : tokens_(std::move(tokens)), separator_(std::move(separator)) {
    if (tokens_.size() < 2) throw ConfigError("vocabulary needs at least 2 tokens");
    if (tokens_.front() != kEndTokenText)
      throw ConfigError("vocabulary index 0 must be the end token");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw ConfigError("vocabulary contains an empty token");
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
        throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
      max_token_len_ = std::max(max_token_len_, tokens_[i].size());
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& separator() const noexcept { return separator_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  TokenId id_of(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) throw DataError("token '" + std::string(tok) + "' not in vocabulary");
    return it->second;
  }

  /// Joins every non-end token with the separator.
  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    bool first = true;
    for (TokenId id : ids) {
      if (id == kEndToken) continue;
      if (!first) out += separator_;
      out += token(id);
      first = false;
    }
    return out;
  }

  /// Whitespace-split lookup for word vocabularies; greedy longest match for
  /// character-level ones (empty separator).
  std::vector<TokenId> encode(std::string_view s) const {
    std::vector<TokenId> out;
    s = text::trim(s);
    if (!separator_.empty()) {
      std::size_t i = 0;
      while (i < s.size()) {
        while (i < s.size() && text::is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !text::is_space(s[j])) ++j;
        if (j > i) out.push_back(id_of(s.substr(i, j - i)));
        i = j;
      }
      return out;
    }
    std::size_t i = 0;
    while (i < s.size()) {
      TokenId match = -1;
      std::size_t match_len = 0;
      for (std::size_t len = std::min(max_token_len_, s.size() - i); len > 0; --len) {
        auto it = index_.find(std::string(s.substr(i, len)));
        if (it != index_.end() && it->second != kEndToken) {
          match = it->second;
          match_len = len;
          break;
        }
      }
      if (match < 0) throw DataError("cannot tokenize '" + std::string(s) + "'");
      out.push_back(match);
      i += match_len;
    }
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.separator_ == b.separator_;
  }

 private:
  std::vector<std::string> tokens_;
  std::string separator_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_token_len_ = 0;
};

/// Logits of shape [features x length x vocab], row-major. Immutable: every
/// update produces a new value with a bumped version.
class PolicyParams {
 public:
  static PolicyParams zeros(std::size_t features, std::size_t length, std::size_t vocab) {
    return PolicyParams(features, length, vocab,
                        std::vector<double>(features * length * vocab, 0.0), 0);
  }

  PolicyParams(std::size_t features, std::size_t length, std::size_t vocab,
               std::vector<double> logits, std::uint64_t version)
      : features_(features), length_(length), vocab_(vocab), logits_(std::move(logits)),
        version_(version) {
    if (features_ == 0 || length_ == 0 || vocab_ < 2)
      throw ConfigError("policy shape needs F >= 1, L >= 1, V >= 2");
    if (logits_.size() != features_ * length_ * vocab_)
      throw ConfigError("logit count does not match policy shape");
    if (!std::all_of(logits_.begin(), logits_.end(), [](double x) { return std::isfinite(x); }))
      throw ConfigError("policy logits must be finite");
  }

  std::size_t features() const noexcept { return features_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t size() const noexcept { return logits_.size(); }
  std::uint64_t version() const noexcept { return version_; }
  std::span<const double> logits() const noexcept { return logits_; }

  std::size_t offset(std::size_t f, std::size_t t) const noexcept {
    return (f * length_ + t) * vocab_;
  }
  std::span<const double> slot(std::size_t f, std::size_t t) const {
    return std::span<const double>(logits_).subspan(offset(f, t), vocab_);
  }
  double at(std::size_t f, std::size_t t, std::size_t v) const { return logits_[offset(f, t) + v]; }

  /// Copy with logits + lr * direction and version + 1.
  PolicyParams stepped(std::span<const double> direction, double lr) const {
    if (direction.size() != logits_.size()) throw ConfigError("gradient shape mismatch");
    std::vector<double> next(logits_);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += lr * direction[i];
    return PolicyParams(features_, length_, vocab_, std::move(next), version_ + 1);
  }

  PolicyParams with_version(std::uint64_t version) const {
    PolicyParams copy(*this);
    copy.version_ = version;
    return copy;
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t features_;
  std::size_t length_;
  std::size_t vocab_;
  std::vector<double> logits_;
  std::uint64_t version_;
};

struct Policy {
  Vocabulary vocab;
  PolicyParams params;
};

inline Policy make_policy(Vocabulary vocab, std::size_t features, std::size_t length) {
  auto params = PolicyParams::zeros(features, length, vocab.size());
  return Policy{std::move(vocab), std::move(params)};
}

struct Response {
  std::string prompt_id;
  std::vector<TokenId> token_ids;
  std::string text;
  double logprob = 0.0;
  std::string final_step;

  friend bool operator==(const Response&, const Response&) = default;
};

/// Bucket of a prompt: FNV-1a of the question text modulo F.
inline std::size_t prompt_feature(std::string_view question, std::size_t features) {
  return static_cast<std::size_t>(fnv1a64(question) % features);
}

/// Numerically stable log-softmax.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  auto out = log_softmax(logits);
  for (double& x : out) x = std::exp(x);
  return out;
}

namespace detail {

inline void check_sequence(const PolicyParams& params, std::size_t feature,
                           std::span<const TokenId> tokens) {
  if (feature >= params.features())
    throw DataError("prompt feature " + std::to_string(feature) + " out of range");
  if (tokens.size() > params.length())
    throw DataError("sequence of length " + std::to_string(tokens.size()) +
                    " exceeds max length " + std::to_string(params.length()));
  for (TokenId id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab())
      throw DataError("token id " + std::to_string(id) + " out of range");
  }
}

inline Response finish_response(const Vocabulary& vocab, std::string prompt_id,
                                std::vector<TokenId> tokens, double logprob) {
  Response r;
  r.prompt_id = std::move(prompt_id);
  r.text = vocab.decode(tokens);
  r.final_step = text::last_nonempty_line(r.text);
  r.token_ids = std::move(tokens);
  r.logprob = logprob;
  return r;
}

}  // namespace detail

/// Draws tokens position by position until the end token or the length cap.
/// Pure in (params, feature, seed).
inline Response sample_response(const Policy& policy, std::size_t feature, std::uint64_t seed,
                                std::string prompt_id = {}) {
  const auto& params = policy.params;
  if (feature >= params.features()) throw DataError("prompt feature out of range");
  Rng rng(seed);
  std::vector<TokenId> tokens;
  double total = 0.0;
  for (std::size_t t = 0; t < params.length(); ++t) {
    const auto logp = log_softmax(params.slot(feature, t));
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = logp.size() - 1;
    for (std::size_t v = 0; v < logp.size(); ++v) {
      cum += std::exp(logp[v]);
      if (u < cum) {
        pick = v;
        break;
      }
    }
    tokens.push_back(static_cast<TokenId>(pick));
    total += logp[pick];
    if (pick == static_cast<std::size_t>(kEndToken)) break;
  }
  return detail::finish_response(policy.vocab, std::move(prompt_id), std::move(tokens), total);
}

/// Argmax decoding; ties resolve to the lowest token id.
inline Response greedy_response(const Policy& policy, std::size_t feature,
                                std::string prompt_id = {}) {
  const auto& params = policy.params;
  if (feature >= params.features()) throw DataError("prompt feature out of range");
  std::vector<TokenId> tokens;
  double total = 0.0;
  for (std::size_t t = 0; t < params.length(); ++t) {
    const auto slot = params.slot(feature, t);
    const auto pick = static_cast<std::size_t>(std::max_element(slot.begin(), slot.end()) - slot.begin());
    tokens.push_back(static_cast<TokenId>(pick));
    total += log_softmax(slot)[pick];
    if (pick == static_cast<std::size_t>(kEndToken)) break;
  }
  return detail::finish_response(policy.vocab, std::move(prompt_id), std::move(tokens), total);
}

/// Sum over positions of log softmax(logits[f, t, :])[token_t].
inline double logprob(const PolicyParams& params, std::size_t feature,
                      std::span<const TokenId> tokens) {
  detail::check_sequence(params, feature, tokens);
  double total = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t)
    total += log_softmax(params.slot(feature, t))[static_cast<std::size_t>(tokens[t])];
  return total;
}

/// out += scale * d logprob / d logits, touching only the used slots.
inline void accumulate_grad_logprob(const PolicyParams& params, std::size_t feature,
                                    std::span<const TokenId> tokens, double scale,
                                    std::span<double> out) {
  detail::check_sequence(params, feature, tokens);
  if (out.size() != params.size()) throw ConfigError("gradient buffer shape mismatch");
  if (scale == 0.0) return;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto probs = softmax(params.slot(feature, t));
    const std::size_t base = params.offset(feature, t);
    for (std::size_t v = 0; v < probs.size(); ++v) {
      const double indicator = static_cast<std::size_t>(tokens[t]) == v ? 1.0 : 0.0;
      out[base + v] += scale * (indicator - probs[v]);
    }
  }
}

/// Dense gradient of logprob with respect to every logit.
inline std::vector<double> grad_logprob(const PolicyParams& params, std::size_t feature,
                                        std::span<const TokenId> tokens) {
  std::vector<double> g(params.size(), 0.0);
  accumulate_grad_logprob(params, feature, tokens, 1.0, g);
  return g;
}

/// Token ids for a reference answer, with the end token appended when it
/// fits.
inline std::vector<TokenId> reference_tokens(const Vocabulary& vocab, std::string_view reference,
                                             std::size_t max_length) {
  auto ids = vocab.encode(reference);
  if (ids.size() > max_length)
    throw DataError("reference '" + std::string(reference) + "' longer than max length " +
                    std::to_string(max_length));
  if (ids.size() < max_length) ids.push_back(kEndToken);
  return ids;
}

struct SftExample {
  std::size_t feature;
  std::vector<TokenId> tokens;
};

/// One gradient-ascent step on the mean reference log-likelihood.
inline PolicyParams sft_update(const PolicyParams& params, std::span<const SftExample> batch,
                               double lr) {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  std::vector<double> g(params.size(), 0.0);
  if (batch.empty()) return params.stepped(g, lr);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (ex.tokens.size() > params.length())
      throw DataError("reference longer than max length");
    accumulate_grad_logprob(params, ex.feature, ex.tokens, scale, g);
  }
  return params.stepped(g, lr);
}

/// Deep copy serving as the frozen KL anchor.
inline PolicyParams freeze_reference(const PolicyParams& params) { return PolicyParams(params); }

/// log pi(y) - log pi_ref(y) over the whole response.
inline double log_ratio(const PolicyParams& live, const PolicyParams& ref, std::size_t feature,
                        std::span<const TokenId> tokens) {
  return logprob(live, feature, tokens) - logprob(ref, feature, tokens);
}

}  // namespace rlvr
