// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles/finite_difference.hpp"
#include "rlvr/checkpoint.hpp"
#include "rlvr/core/random.hpp"
#include "rlvr/policy.hpp"

namespace rlvr {
namespace {

Policy word_policy(std::size_t features, std::size_t length, std::size_t answer_tokens) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < answer_tokens; ++i) words.push_back("w" + std::to_string(i));
  return make_policy(Vocabulary::from_tokens(words, " "), features, length);
}

PolicyParams random_params(std::size_t F, std::size_t L, std::size_t V, Rng& rng, double scale = 2.0) {
  std::vector<double> logits(F * L * V);
  for (double& x : logits) x = scale * (2.0 * uniform01(rng) - 1.0);
  return PolicyParams(F, L, V, std::move(logits), 0);
}

std::vector<TokenId> random_sequence(const PolicyParams& p, Rng& rng) {
  const auto len = 1 + uniform_below(rng, p.length());
  std::vector<TokenId> seq;
  for (std::size_t t = 0; t < len; ++t) seq.push_back(static_cast<TokenId>(uniform_below(rng, p.vocab())));
  return seq;
}

TEST(Vocabulary, EndTokenIsIndexZero) {
  const auto v = Vocabulary::from_tokens({"a", "b"}, " ");
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.token(kEndToken), kEndTokenText);
  EXPECT_EQ(v.id_of("b"), 2);
}

TEST(Vocabulary, RejectsDuplicates) {
  EXPECT_THROW(Vocabulary::from_tokens({"a", "a"}), ConfigError);
  EXPECT_THROW(Vocabulary({"a", "b"}, ""), ConfigError);
}

TEST(Vocabulary, EncodeDecode) {
  const auto digits = Vocabulary::from_tokens({"0", "1", "2", "12"}, "");
  EXPECT_EQ(digits.encode("120"), (std::vector<TokenId>{4, 1}));  // longest match first
  EXPECT_EQ(digits.decode(std::vector<TokenId>{3, 2, kEndToken}), "21");
  const auto words = Vocabulary::from_tokens({"the", "answer", "is", "4"}, " ");
  EXPECT_EQ(words.encode("  the answer\tis 4 "), (std::vector<TokenId>{1, 2, 3, 4}));
  EXPECT_EQ(words.decode(std::vector<TokenId>{1, 4, kEndToken}), "the 4");
  EXPECT_THROW(words.encode("the cat"), DataError);
}

TEST(Sampling, UniformLogitsPassChiSquare) {
  auto policy = word_policy(1, 1, 3);  // V = 4
  std::array<int, 4> counts{};
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    const auto r = sample_response(policy, 0, static_cast<std::uint64_t>(seed));
    ASSERT_EQ(r.token_ids.size(), 1u);
    ++counts[static_cast<std::size_t>(r.token_ids[0])];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 11.345);  // chi-square critical value, df = 3, alpha = 0.01
}

TEST(Sampling, DominantLogitIsAlmostAlwaysSampled) {
  std::vector<double> logits(4, 0.0);
  logits[2] = 20.0;
  Policy policy{Vocabulary::from_tokens({"a", "b", "c"}), PolicyParams(1, 1, 4, logits, 0)};
  int hits = 0;
  for (int seed = 0; seed < 10000; ++seed)
    hits += sample_response(policy, 0, static_cast<std::uint64_t>(seed)).token_ids[0] == 2;
  EXPECT_GT(hits / 10000.0, 0.999);
}

TEST(Sampling, SameSeedSameResponse) {
  Rng rng(5);
  Policy policy{Vocabulary::from_tokens({"a", "b", "c"}, " "), random_params(4, 3, 4, rng)};
  EXPECT_EQ(sample_response(policy, 2, 99, "p"), sample_response(policy, 2, 99, "p"));
}

TEST(Sampling, StopsAtEndTokenAndRespectsLength) {
  Rng rng(11);
  Policy policy{Vocabulary::from_tokens({"a", "b", "c"}, " "), random_params(2, 5, 4, rng)};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto r = sample_response(policy, 1, seed);
    ASSERT_LE(r.token_ids.size(), 5u);
    for (std::size_t t = 0; t + 1 < r.token_ids.size(); ++t) EXPECT_NE(r.token_ids[t], kEndToken);
    EXPECT_LE(r.logprob, 0.0);
    EXPECT_EQ(r.final_step, text::last_nonempty_line(r.text));
    // The recorded log-probability is exactly what logprob() reports.
    EXPECT_EQ(r.logprob, logprob(policy.params, 1, r.token_ids));
  }
}

TEST(Logprob, UniformTwoTokens) {
  const auto params = PolicyParams::zeros(1, 2, 4);
  EXPECT_NEAR(logprob(params, 0, std::vector<TokenId>{1, 3}), 2.0 * std::log(0.25), 1e-12);
}

TEST(Logprob, ConstructedProbability) {
  // logits (ln 9, 0) over V = 2 give p = 0.9 for token 0.
  const PolicyParams params(1, 1, 2, {std::log(9.0), 0.0}, 0);
  EXPECT_NEAR(logprob(params, 0, std::vector<TokenId>{0}), std::log(0.9), 1e-12);
}

TEST(Logprob, EmptySequenceIsZero) {
  const auto params = PolicyParams::zeros(1, 2, 4);
  EXPECT_EQ(logprob(params, 0, std::vector<TokenId>{}), 0.0);
}

TEST(Logprob, RejectsOutOfRange) {
  const auto params = PolicyParams::zeros(2, 2, 4);
  EXPECT_THROW(logprob(params, 0, std::vector<TokenId>{4}), DataError);
  EXPECT_THROW(logprob(params, 0, std::vector<TokenId>{-1}), DataError);
  EXPECT_THROW(logprob(params, 2, std::vector<TokenId>{1}), DataError);
  EXPECT_THROW(logprob(params, 0, std::vector<TokenId>{1, 1, 1}), DataError);
  EXPECT_THROW(grad_logprob(params, 0, std::vector<TokenId>{9}), DataError);
}

TEST(Softmax, ProbabilitiesSumToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_params(1, 1, 2 + uniform_below(rng, 30), rng, 30.0);
    const auto probs = softmax(p.slot(0, 0));
    double sum = 0.0;
    for (double x : probs) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(GradLogprob, UniformBinaryValues) {
  const auto params = PolicyParams::zeros(1, 1, 2);
  const auto g = grad_logprob(params, 0, std::vector<TokenId>{0});
  EXPECT_NEAR(g[0], 0.5, 1e-15);
  EXPECT_NEAR(g[1], -0.5, 1e-15);
}

TEST(GradLogprob, SlicesSumToZeroAndUnusedSlotsAreZero) {
  Rng rng(17);
  const auto params = random_params(3, 4, 6, rng);
  const std::vector<TokenId> seq = {2, 5};
  const auto g = grad_logprob(params, 1, seq);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t t = 0; t < 4; ++t) {
      double sum = 0.0, mag = 0.0;
      for (std::size_t v = 0; v < 6; ++v) {
        sum += g[params.offset(f, t) + v];
        mag += std::abs(g[params.offset(f, t) + v]);
      }
      EXPECT_NEAR(sum, 0.0, 1e-12);
      if (f != 1 || t >= seq.size()) EXPECT_EQ(mag, 0.0);
    }
  }
}

TEST(GradLogprob, MatchesCentralDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto params = random_params(2, 3, 5, rng);
    const auto seq = random_sequence(params, rng);
    const std::size_t f = uniform_below(rng, 2);
    const auto analytic = grad_logprob(params, f, seq);
    const auto numeric = oracle::central_difference(
        params, [&](const PolicyParams& p) { return logprob(p, f, seq); }, 1e-5);
    EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4) << "trial " << trial;
  }
}

// E_y[grad log pi(y)] = 0: Monte Carlo mean within 3 standard errors.
TEST(GradLogprob, ScoreFunctionHasZeroMean) {
  Rng rng(8);
  Policy policy{Vocabulary::from_tokens({"a", "b", "c"}), random_params(1, 2, 4, rng, 1.0)};
  const int n = 50000;
  std::vector<double> sum(policy.params.size(), 0.0), sumsq(policy.params.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto r = sample_response(policy, 0, static_cast<std::uint64_t>(i) + 1000);
    const auto g = grad_logprob(policy.params, 0, r.token_ids);
    for (std::size_t j = 0; j < g.size(); ++j) {
      sum[j] += g[j];
      sumsq[j] += g[j] * g[j];
    }
  }
  for (std::size_t j = 0; j < sum.size(); ++j) {
    const double mean = sum[j] / n;
    const double var = sumsq[j] / n - mean * mean;
    const double stderr_ = std::sqrt(std::max(var, 0.0) / n);
    EXPECT_LE(std::abs(mean), 3.0 * stderr_ + 1e-15) << "entry " << j;
  }
}

TEST(SftUpdate, DrivesReferenceProbabilityUp) {
  auto params = PolicyParams::zeros(2, 3, 5);
  const std::vector<SftExample> batch = {{1, {3, 2, kEndToken}}};
  double prev = logprob(params, 1, batch[0].tokens);
  for (int i = 0; i < 500; ++i) {
    params = sft_update(params, batch, 0.5);
    const double cur = logprob(params, 1, batch[0].tokens);
    ASSERT_GT(cur, prev) << "step " << i;
    prev = cur;
  }
  EXPECT_GT(prev, -0.05);
  EXPECT_EQ(params.version(), 500u);
}

TEST(SftUpdate, ZeroLearningRateLeavesLogits) {
  Rng rng(1);
  const auto params = random_params(2, 2, 3, rng);
  const std::vector<SftExample> batch = {{0, {1, 2}}};
  const auto next = sft_update(params, batch, 0.0);
  EXPECT_TRUE(std::equal(next.logits().begin(), next.logits().end(), params.logits().begin()));
}

TEST(SftUpdate, DuplicatedBatchGivesSameUpdate) {
  Rng rng(4);
  const auto params = random_params(2, 2, 3, rng);
  const SftExample ex{1, {2, 1}};
  const std::vector<SftExample> one = {ex};
  const std::vector<SftExample> two = {ex, ex};
  EXPECT_EQ(sft_update(params, one, 0.3), sft_update(params, two, 0.3));
}

TEST(SftUpdate, RejectsTooLongReference) {
  const auto params = PolicyParams::zeros(1, 2, 3);
  const std::vector<SftExample> batch = {{0, {1, 1, 1}}};
  EXPECT_THROW(sft_update(params, batch, 0.1), DataError);
}

TEST(ReferenceTokens, AppendsEndWhenRoomRemains) {
  const auto v = Vocabulary::from_tokens({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"});
  EXPECT_EQ(reference_tokens(v, "7", 2), (std::vector<TokenId>{8, kEndToken}));
  EXPECT_EQ(reference_tokens(v, "15", 2), (std::vector<TokenId>{2, 6}));
  EXPECT_THROW(reference_tokens(v, "123", 2), DataError);
}

TEST(FreezeReference, IndependentOfLiveUpdates) {
  Rng rng(9);
  auto live = random_params(1, 2, 4, rng);
  const auto ref = freeze_reference(live);
  EXPECT_EQ(freeze_reference(ref), ref);
  const std::vector<TokenId> seq = {1, 3};
  EXPECT_EQ(log_ratio(live, ref, 0, seq), 0.0);
  const double before = logprob(ref, 0, seq);
  const std::vector<SftExample> batch = {{0, seq}};
  for (int i = 0; i < 10; ++i) live = sft_update(live, batch, 1.0);
  EXPECT_EQ(logprob(ref, 0, seq), before);
  EXPECT_GT(log_ratio(live, ref, 0, seq), 0.0);
}

TEST(GreedyResponse, PicksArgmaxAndStopsAtEnd) {
  std::vector<double> logits(2 * 4, 0.0);
  logits[3] = 1.0;      // position 0 -> token 3
  logits[4 + 0] = 2.0;  // position 1 -> end
  Policy policy{Vocabulary::from_tokens({"a", "b", "c"}, " "), PolicyParams(1, 2, 4, logits, 0)};
  const auto r = greedy_response(policy, 0, "p");
  EXPECT_EQ(r.token_ids, (std::vector<TokenId>{3, kEndToken}));
  EXPECT_EQ(r.text, "c");
  EXPECT_EQ(r.final_step, "c");
  // All-zero logits tie everywhere; the end token wins and the answer is empty.
  EXPECT_EQ(greedy_response(word_policy(1, 2, 3), 0).text, "");
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(77);
  Policy policy{Vocabulary::from_tokens({"x", "y z", "w"}, " "), random_params(3, 2, 4, rng)};
  policy.params = policy.params.with_version(12);
  const auto path = (std::filesystem::temp_directory_path() / "rlvr_ckpt_test.json").string();
  save_checkpoint(policy, path);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.vocab, policy.vocab);
  EXPECT_EQ(back.params, policy.params);
  std::remove(path.c_str());
  EXPECT_THROW(load_checkpoint(path), DataError);
}

TEST(PolicyParams, RejectsNonFiniteAndBadShape) {
  EXPECT_THROW(PolicyParams(1, 1, 2, {0.0, NAN}, 0), ConfigError);
  EXPECT_THROW(PolicyParams(1, 1, 2, {0.0}, 0), ConfigError);
  EXPECT_THROW(PolicyParams::zeros(0, 1, 2), ConfigError);
}

}  // namespace
}  // namespace rlvr
