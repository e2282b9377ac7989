// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "rlvr/core/random.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr {
namespace {

TEST(ExtractFinalStep, LastNonEmptyLine) {
  EXPECT_EQ(extract_final_step("work...\n\nThe answer is 4\n"), "The answer is 4");
  EXPECT_EQ(extract_final_step("only line"), "only line");
  EXPECT_EQ(extract_final_step(""), "");
  EXPECT_EQ(extract_final_step("a\n   \n\t\n"), "a");
  EXPECT_EQ(extract_final_step("a\r\nb  \r\n"), "b");
}

TEST(RuleRewardBinary, Containment) {
  EXPECT_EQ(rule_reward_binary("4", "The answer is 4").value(), 1.0);
  EXPECT_EQ(rule_reward_binary("42", "The answer is 4").value(), 0.0);
  EXPECT_EQ(rule_reward_binary("Self-awareness guidance",
                               "It belongs to SELF-AWARENESS   guidance.")
                .value(),
            1.0);
  EXPECT_THROW(rule_reward_binary("  ", "anything"), DataError);
}

TEST(RuleRewardSoft, HandComputedJaccard) {
  // {the, answer, is, 42} vs {42}: one shared token out of four.
  EXPECT_DOUBLE_EQ(rule_reward_soft("the answer is 42", "42").value(), 0.25);
  EXPECT_EQ(rule_reward_soft("Production of ATP", "production of atp").value(), 1.0);
  EXPECT_EQ(rule_reward_soft("alpha beta", "gamma delta").value(), 0.0);
  EXPECT_EQ(rule_reward_soft("", "").value(), 1.0);
  EXPECT_EQ(rule_reward_soft("!!", "...").value(), 1.0);
  EXPECT_EQ(rule_reward_soft("x", "").value(), 0.0);
  // 2.67; 1.73 tokenizes to {2, 67, 1, 73}.
  EXPECT_DOUBLE_EQ(rule_reward_soft("2.67; 1.73", "Ks = 2.67").value(), 2.0 / 5.0);
}

TEST(ModelRewards, FollowIndicatorAndProbabilityRules) {
  EXPECT_EQ(model_reward_binary({Verdict::Correct, 0.9}).value(), 1.0);
  EXPECT_EQ(model_reward_binary({Verdict::Incorrect, 0.8}).value(), 0.0);
  EXPECT_EQ(model_reward_binary({Verdict::Invalid, 0.5}).value(), 0.0);
  EXPECT_EQ(model_reward_soft({Verdict::Correct, 0.9}).value(), 0.9);
  EXPECT_DOUBLE_EQ(model_reward_soft({Verdict::Incorrect, 0.8}).value(), 0.2);
  EXPECT_EQ(model_reward_soft({Verdict::Invalid, 0.99}).value(), 0.0);
}

TEST(RewardValue, RejectsOutOfRange) {
  EXPECT_THROW(RewardValue(1.5), InvariantViolation);
  EXPECT_THROW(RewardValue(-0.1), InvariantViolation);
  EXPECT_THROW(RewardValue(NAN), InvariantViolation);
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "ab 4 2\nXY-.,\t";
  std::string s;
  const auto len = uniform_below(rng, 12);
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[uniform_below(rng, alphabet.size())]);
  return s;
}

std::set<std::string> token_set(const std::string& s) {
  const auto t = text::word_tokens(s);
  return {t.begin(), t.end()};
}

// Fuzz: bounds, symmetry, equality characterization and rule implications.
TEST(VerifierProperties, RandomInputs) {
  Rng rng(123);
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_text(rng);
    const auto b = random_text(rng);
    const double soft = rule_reward_soft(a, b).value();
    ASSERT_GE(soft, 0.0);
    ASSERT_LE(soft, 1.0);
    ASSERT_EQ(soft, rule_reward_soft(b, a).value());
    ASSERT_EQ(soft == 1.0, token_set(a) == token_set(b)) << a << " | " << b;
    if (!text::normalize(a).empty()) {
      const double bin = rule_reward_binary(a, b).value();
      ASSERT_TRUE(bin == 0.0 || bin == 1.0);
    }

    const Judgment j{static_cast<Verdict>(uniform_below(rng, 3)), uniform01(rng)};
    const double mb = model_reward_binary(j).value();
    const double ms = model_reward_soft(j).value();
    ASSERT_GE(ms, 0.0);
    ASSERT_LE(ms, 1.0);
    ASSERT_EQ(mb == 1.0, j.verdict == Verdict::Correct);
    if (j.verdict != Verdict::Invalid && j.confidence >= 0.5) {
      // Thresholding the soft reward at 0.5 recovers the binary one.
      ASSERT_EQ(ms >= 0.5 ? 1.0 : 0.0, mb) << j.confidence;
    }
  }
}

// Containment implies a shared token only when the match is word-aligned:
// "4" occurs inside "42" but shares no token with it.
TEST(VerifierProperties, SubwordContainmentSharesNoToken) {
  EXPECT_EQ(rule_reward_binary("4", "42").value(), 1.0);
  EXPECT_EQ(rule_reward_soft("4", "42").value(), 0.0);
}

TEST(VerifierProperties, AlignedContainmentImpliesSharedToken) {
  // No word is a prefix or suffix of another, so every match is aligned.
  const std::vector<std::string> words = {"alpha", "42", "beta", "x7", "gamma"};
  Rng rng(99);
  const auto phrase = [&](std::size_t min_len) {
    std::string s;
    const auto len = min_len + uniform_below(rng, 5);
    for (std::size_t i = 0; i < len; ++i) {
      if (i) s += uniform_below(rng, 2) ? " " : "  \n";
      s += words[uniform_below(rng, words.size())];
    }
    return s;
  };
  int matches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto ref = phrase(1);
    const auto resp = phrase(0);
    if (rule_reward_binary(ref, resp).value() == 1.0) {
      ++matches;
      ASSERT_GT(rule_reward_soft(ref, resp).value(), 0.0) << ref << " | " << resp;
    }
  }
  EXPECT_GT(matches, 100);
}

}  // namespace
}  // namespace rlvr
