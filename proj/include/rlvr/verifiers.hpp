// SPDX-License-Identifier: Apache-2.0
//
// Reward functions over (reference, response) pairs. Rule-based variants
// look at the text directly; model-based variants turn a judge's verdict on
// the final step into a reward.
#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>

#include "rlvr/core/error.hpp"
#include "rlvr/core/text.hpp"

namespace rlvr {

enum class Verdict { Correct, Incorrect, Invalid };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::Incorrect: return "incorrect";
    case Verdict::Invalid: return "invalid";
  }
  return "invalid";
}

inline Verdict verdict_from_string(std::string_view s) {
  if (s == "correct") return Verdict::Correct;
  if (s == "incorrect") return Verdict::Incorrect;
  if (s == "invalid") return Verdict::Invalid;
  throw DataError("unknown verdict '" + std::string(s) + "'");
}

/// A judge decision. `confidence` is the probability the judge assigned to
/// the token it actually emitted.
struct Judgment {
  Verdict verdict = Verdict::Invalid;
  double confidence = 0.0;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

/// A reward on the binary scale, always within [0, 1].
class RewardValue {
 public:
  constexpr RewardValue() = default;
  explicit RewardValue(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvariantViolation("reward " + std::to_string(v) + " outside [0, 1]");
  }
  constexpr double value() const noexcept { return value_; }
  friend constexpr bool operator==(RewardValue, RewardValue) = default;

 private:
  double value_ = 0.0;
};

inline std::string extract_final_step(std::string_view response_text) {
  return text::last_nonempty_line(response_text);
}

/// 1 if the normalized reference occurs inside the normalized response.
inline RewardValue rule_reward_binary(std::string_view reference, std::string_view response_text) {
  const auto ref = text::normalize(reference);
  if (ref.empty()) throw DataError("rule_reward_binary: empty reference");
  const auto resp = text::normalize(response_text);
  return RewardValue(resp.find(ref) != std::string::npos ? 1.0 : 0.0);
}

/// Jaccard index of the lowercased alphanumeric token sets.
inline RewardValue rule_reward_soft(std::string_view reference, std::string_view response_text) {
  const auto a_tokens = text::word_tokens(reference);
  const auto b_tokens = text::word_tokens(response_text);
  const std::set<std::string> a(a_tokens.begin(), a_tokens.end());
  const std::set<std::string> b(b_tokens.begin(), b_tokens.end());
  if (a.empty() && b.empty()) return RewardValue(1.0);
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return RewardValue(static_cast<double>(inter) / static_cast<double>(uni));
}

inline RewardValue model_reward_binary(const Judgment& j) {
  return RewardValue(j.verdict == Verdict::Correct ? 1.0 : 0.0);
}

/// Correct -> p(emitted "yes"); Incorrect -> 1 - p(emitted "no"); Invalid -> 0.
/// No renormalization over the two judgment tokens.
inline RewardValue model_reward_soft(const Judgment& j) {
  switch (j.verdict) {
    case Verdict::Correct: return RewardValue(j.confidence);
    case Verdict::Incorrect: return RewardValue(1.0 - j.confidence);
    case Verdict::Invalid: return RewardValue(0.0);
  }
  return RewardValue(0.0);
}

}  // namespace rlvr
