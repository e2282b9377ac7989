// SPDX-License-Identifier: Apache-2.0
//
// The rollout -> reward -> normalize -> KL-shape -> update loop.
#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/core/random.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/evaluation.hpp"
#include "rlvr/llm/client.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rl/advantage.hpp"
#include "rlvr/rl/distill.hpp"
#include "rlvr/rl/update.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr::rl {

enum class Algorithm { Reinforce, Rloo, ReinforcePP };
enum class RewardSource { RuleBinary, RuleSoft, ModelBinary, ModelSoft };
enum class NormalizationScope { Batch, PerPromptGroup };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Reinforce: return "reinforce";
    case Algorithm::Rloo: return "rloo";
    case Algorithm::ReinforcePP: return "reinforce++";
  }
  return "reinforce";
}

inline std::string_view to_string(RewardSource r) {
  switch (r) {
    case RewardSource::RuleBinary: return "rule-binary";
    case RewardSource::RuleSoft: return "rule-soft";
    case RewardSource::ModelBinary: return "model-binary";
    case RewardSource::ModelSoft: return "model-soft";
  }
  return "rule-binary";
}

inline bool is_model_based(RewardSource r) {
  return r == RewardSource::ModelBinary || r == RewardSource::ModelSoft;
}

struct TrainConfig {
  Algorithm algorithm = Algorithm::Reinforce;
  RewardSource reward_source = RewardSource::RuleBinary;
  double beta = 0.01;
  int n_samples_per_prompt = 4;
  int rollout_batch_size = 128;
  // The LLM-scale default (5e-7) does nothing for a tabular policy whose
  // logits start at zero; this is the toy-scale equivalent.
  double learning_rate = 0.5;
  int max_steps = 0;
  std::uint64_t seed = 0;
  NormalizationScope normalization_scope = NormalizationScope::Batch;
  int eval_every = 0;  // 0 disables in-loop evaluation
  bool collect_distill = false;

  void validate() const {
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (n_samples_per_prompt < 1) throw ConfigError("n_samples_per_prompt must be >= 1");
    if (algorithm == Algorithm::Rloo && n_samples_per_prompt < 2)
      throw ConfigError("RLOO requires n_samples_per_prompt >= 2");
    if (rollout_batch_size < 1) throw ConfigError("rollout_batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate must be finite and >= 0");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  }
};

struct StepMetrics {
  int step = 0;
  double mean_raw_reward = 0.0;
  double mean_shaped_reward = 0.0;
  double kl_estimate = 0.0;
  std::optional<double> eval_accuracy;
};

inline nlohmann::json to_json(const StepMetrics& m) {
  nlohmann::json j = {{"step", m.step},
                      {"mean_raw_reward", m.mean_raw_reward},
                      {"mean_shaped_reward", m.mean_shaped_reward},
                      {"kl_estimate", m.kl_estimate}};
  if (m.eval_accuracy) j["eval_accuracy"] = *m.eval_accuracy;
  return j;
}

struct TrainResult {
  Policy policy;
  std::vector<StepMetrics> metrics;
  std::vector<DistillRecord> distill;
  std::size_t invalid_verdicts = 0;
};

struct TrainHooks {
  std::function<void(const StepMetrics&, const Policy&)> on_step;
};

/// Greedy exact-match accuracy of `policy` on `prompts`.
inline double exact_match_accuracy(const Policy& policy, std::span<const PromptInstance> prompts) {
  llm::MockJudge exact;
  exact.matcher = llm::MockJudge::Matcher::Exact;
  exact.confidence = 1.0;
  return eval::evaluate_policy(policy, prompts, exact, 1).overall();
}

namespace detail {

/// Walks the prompt set in seeded, reshuffled epochs. A batch never spans
/// two epochs, so one epoch visits every prompt exactly once.
class PromptSchedule {
 public:
  PromptSchedule(std::size_t n, std::size_t batch) : order_(n), batch_(batch) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    pos_ = n;
  }

  std::vector<std::size_t> next(Rng& rng) {
    if (pos_ >= order_.size()) {
      shuffle(std::span<std::size_t>(order_), rng);
      pos_ = 0;
    }
    const auto end = std::min(order_.size(), pos_ + batch_);
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    pos_ = end;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_;
};

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

}  // namespace detail

/// Runs `config.max_steps` policy-gradient steps on `split.train`, evaluating
/// on `split.test` every `eval_every` steps. Model-based rewards need a
/// backend. All randomness comes from one generator seeded with
/// `config.seed`, so a mock backend gives bit-reproducible runs.
inline TrainResult train(const TrainConfig& config, const Policy& initial, const DatasetSplit& split,
                         const std::optional<llm::JudgeBackend>& backend,
                         const TrainHooks& hooks = {}) {
  config.validate();
  if (split.train.empty()) throw ConfigError("training set is empty");
  if (is_model_based(config.reward_source) && !backend)
    throw ConfigError("model-based rewards need a judge backend");

  const auto k = static_cast<std::size_t>(config.n_samples_per_prompt);
  const auto F = initial.params.features();
  const PolicyParams reference = freeze_reference(initial.params);

  TrainResult result{initial, {}, {}, 0};
  Policy& policy = result.policy;

  std::vector<std::size_t> features(split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i)
    features[i] = prompt_feature(split.train[i].question, F);

  Rng rng(config.seed);
  detail::PromptSchedule schedule(split.train.size(),
                                  static_cast<std::size_t>(config.rollout_batch_size));

  for (int step = 1; step <= config.max_steps; ++step) {
    const auto batch = schedule.next(rng);

    // Rollouts: k samples per prompt, grouped consecutively.
    std::vector<Response> responses;
    std::vector<std::size_t> prompt_of;
    responses.reserve(batch.size() * k);
    for (auto pi : batch) {
      for (std::size_t j = 0; j < k; ++j) {
        responses.push_back(sample_response(policy, features[pi], rng(), split.train[pi].id));
        prompt_of.push_back(pi);
      }
    }
    const std::size_t n = responses.size();

    // Raw rewards.
    std::vector<double> raw(n);
    if (is_model_based(config.reward_source)) {
      std::vector<llm::JudgeItem> items;
      items.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& p = split.train[prompt_of[i]];
        items.push_back({p.question, responses[i].final_step, p.reference});
      }
      const auto judgments = llm::judge_many(*backend, items);
      for (std::size_t i = 0; i < n; ++i) {
        raw[i] = (config.reward_source == RewardSource::ModelBinary ? model_reward_binary(judgments[i])
                                                                   : model_reward_soft(judgments[i]))
                     .value();
        if (judgments[i].verdict == Verdict::Invalid) ++result.invalid_verdicts;
        if (config.collect_distill) {
          if (auto rec = make_distill_record(split.train[prompt_of[i]], responses[i].text, judgments[i]))
            result.distill.push_back(std::move(*rec));
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& ref = split.train[prompt_of[i]].reference;
        raw[i] = (config.reward_source == RewardSource::RuleBinary ? rule_reward_binary(ref, responses[i].text)
                                                                  : rule_reward_soft(ref, responses[i].text))
                     .value();
      }
    }
    for (double r : raw) {
      if (!(r >= 0.0 && r <= 1.0)) throw InvariantViolation("raw reward outside [0, 1]");
    }

    std::vector<double> log_ratios(n);
    for (std::size_t i = 0; i < n; ++i)
      log_ratios[i] = responses[i].logprob - logprob(reference, features[prompt_of[i]], responses[i].token_ids);

    const auto normalize = [&](std::span<const double> xs) {
      return config.normalization_scope == NormalizationScope::Batch ? normalize_rewards(xs).first
                                                                     : normalize_rewards_grouped(xs, k);
    };

    std::vector<double> shaped(n);
    std::vector<double> weights(n);
    if (config.algorithm == Algorithm::ReinforcePP) {
      // KL folded into the reward first, then normalized.
      std::vector<double> folded(n);
      for (std::size_t i = 0; i < n; ++i) folded[i] = apply_kl_penalty(raw[i], log_ratios[i], config.beta);
      shaped = normalize(folded);
      weights = shaped;
    } else {
      const auto normalized = normalize(raw);
      for (std::size_t i = 0; i < n; ++i) shaped[i] = apply_kl_penalty(normalized[i], log_ratios[i], config.beta);
      if (config.algorithm == Algorithm::Rloo) {
        for (std::size_t g = 0; g < n; g += k) {
          const auto adv = rloo_advantages(std::span<const double>(shaped).subspan(g, k), k);
          std::copy(adv.begin(), adv.end(), weights.begin() + static_cast<std::ptrdiff_t>(g));
        }
      } else {
        weights = shaped;
      }
    }

    std::vector<WeightedSample> samples(n);
    for (std::size_t i = 0; i < n; ++i)
      samples[i] = {features[prompt_of[i]], responses[i].token_ids, weights[i]};
    policy.params = reinforce_step(policy.params, samples, config.learning_rate);

    StepMetrics m;
    m.step = step;
    m.mean_raw_reward = detail::mean(raw);
    m.mean_shaped_reward = detail::mean(shaped);
    m.kl_estimate = detail::mean(log_ratios);
    if (config.eval_every > 0 && step % config.eval_every == 0 && !split.test.empty())
      m.eval_accuracy = exact_match_accuracy(policy, split.test);
    result.metrics.push_back(m);
    if (hooks.on_step) hooks.on_step(m, policy);
  }
  return result;
}

/// One exploration epoch over the reward-model pool with a teacher judge,
/// harvesting every definite verdict. Refuses to run when the split leaks
/// ids between partitions.
inline TrainResult collect_distill(TrainConfig config, const Policy& initial, const DatasetSplit& split,
                                   const llm::JudgeBackend& teacher) {
  if (!audit_disjoint(split)) throw SeparationError({"<split fails disjointness audit>"});
  if (split.rm_pool.empty()) throw ConfigError("rm_pool is empty");
  if (!is_model_based(config.reward_source)) config.reward_source = RewardSource::ModelBinary;
  config.collect_distill = true;
  const auto b = static_cast<std::size_t>(config.rollout_batch_size);
  config.max_steps = static_cast<int>((split.rm_pool.size() + b - 1) / b);
  config.eval_every = 0;
  DatasetSplit pool;
  pool.train = split.rm_pool;
  return train(config, initial, pool, teacher);
}

}  // namespace rlvr::rl
