// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rlvr/core/error.hpp"

namespace rlvr::rl {

struct BatchStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t n = 0;
};

inline BatchStats batch_stats(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("batch statistics of an empty batch");
  BatchStats s;
  s.n = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

/// z-score with population std. A batch with zero spread maps to all zeros.
inline std::pair<std::vector<double>, BatchStats> normalize_rewards(std::span<const double> raw) {
  if (raw.empty()) throw ConfigError("normalize_rewards: empty batch");
  const auto stats = batch_stats(raw);
  std::vector<double> out(raw.size(), 0.0);
  // A constant batch can still show a tiny stddev from rounding in the mean.
  const bool constant = std::all_of(raw.begin(), raw.end(), [&](double r) { return r == raw[0]; });
  if (!constant && stats.stddev > 0.0) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - stats.mean) / stats.stddev;
  }
  return {std::move(out), stats};
}

/// Normalizes each consecutive group of `group_size` entries on its own.
inline std::vector<double> normalize_rewards_grouped(std::span<const double> raw,
                                                     std::size_t group_size) {
  if (group_size == 0 || raw.size() % group_size != 0)
    throw ConfigError("batch size must be a multiple of the group size");
  std::vector<double> out;
  out.reserve(raw.size());
  for (std::size_t g = 0; g < raw.size(); g += group_size) {
    auto [z, stats] = normalize_rewards(raw.subspan(g, group_size));
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

/// r - beta * log(pi / pi_ref).
inline double apply_kl_penalty(double normalized, double log_ratio, double beta) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  return normalized - beta * log_ratio;
}

/// Leave-one-out baseline: r_i minus the mean of the other k - 1 rewards.
inline std::vector<double> rloo_advantages(std::span<const double> group_rewards, std::size_t k) {
  if (k < 2) throw ConfigError("RLOO needs at least 2 samples per prompt");
  if (group_rewards.size() != k) throw ConfigError("RLOO group size does not match k");
  double total = 0.0;
  for (double r : group_rewards) total += r;
  const double inv = 1.0 / static_cast<double>(k - 1);
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = group_rewards[i] - (total - group_rewards[i]) * inv;
  return out;
}

}  // namespace rlvr::rl
