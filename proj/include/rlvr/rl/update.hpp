// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "rlvr/core/error.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rl/advantage.hpp"

namespace rlvr::rl {

/// One sampled response and the scalar that weights its score function.
struct WeightedSample {
  std::size_t feature = 0;
  std::vector<TokenId> tokens;
  double weight = 0.0;
};

/// Mean over the batch of weight * grad log pi(y). The whole response is one
/// action.
inline std::vector<double> policy_gradient(const PolicyParams& params,
                                           std::span<const WeightedSample> batch) {
  if (batch.empty()) throw ConfigError("policy gradient of an empty batch");
  std::vector<double> g(params.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) accumulate_grad_logprob(params, s.feature, s.tokens, s.weight * scale, g);
  return g;
}

inline PolicyParams reinforce_step(const PolicyParams& params, std::span<const WeightedSample> batch,
                                   double lr) {
  return params.stepped(policy_gradient(params, batch), lr);
}

/// Raw-reward sample for REINFORCE++.
struct ScoredSample {
  std::size_t feature = 0;
  std::vector<TokenId> tokens;
  double reward = 0.0;
};

/// REINFORCE++ advantages: the summed per-token KL term is folded into each
/// raw reward, then the whole batch is z-scored. No critic.
inline std::vector<double> reinforcepp_advantages(const PolicyParams& params, const PolicyParams& ref,
                                                  std::span<const ScoredSample> batch, double beta) {
  if (batch.empty()) throw ConfigError("REINFORCE++ on an empty batch");
  std::vector<double> shaped(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double kl = 0.0;
    if (beta != 0.0) {
      // Per-token log ratios; their sum is the sequence log ratio.
      for (std::size_t t = 0; t < batch[i].tokens.size(); ++t) {
        const auto tok = static_cast<std::size_t>(batch[i].tokens[t]);
        kl += log_softmax(params.slot(batch[i].feature, t))[tok] -
              log_softmax(ref.slot(batch[i].feature, t))[tok];
      }
    }
    shaped[i] = apply_kl_penalty(batch[i].reward, kl, beta);
  }
  return normalize_rewards(shaped).first;
}

inline PolicyParams reinforcepp_step(const PolicyParams& params, const PolicyParams& ref,
                                     std::span<const ScoredSample> batch, double lr, double beta) {
  const auto adv = reinforcepp_advantages(params, ref, batch, beta);
  std::vector<WeightedSample> weighted;
  weighted.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    weighted.push_back({batch[i].feature, batch[i].tokens, adv[i]});
  return reinforce_step(params, weighted, lr);
}

}  // namespace rlvr::rl
