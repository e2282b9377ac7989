// SPDX-License-Identifier: Apache-2.0
//
// Judge-based correctness evaluation: majority voting over m judge samples,
// Cohen's kappa between two graders, and per-category accuracy.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/llm/client.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr::eval {

inline constexpr double kDefaultVoteTemperature = 0.7;

/// Correct iff at least half of the votes say Correct (ties count as
/// correct). Invalid votes are not-correct.
inline bool majority_vote(std::span<const Judgment> votes) {
  if (votes.empty()) throw ConfigError("majority_vote needs at least one vote");
  std::size_t yes = 0;
  for (const auto& v : votes) yes += v.verdict == Verdict::Correct ? 1 : 0;
  return 2 * yes >= votes.size();
}

/// Contingency counts indexed [grader A][grader B], true first.
using Contingency = std::array<std::array<std::int64_t, 2>, 2>;

struct AgreementReport {
  double kappa = 0.0;
  double observed_agreement = 0.0;
  double chance_agreement = 0.0;
  std::int64_t n = 0;
  Contingency contingency{};  // [0][0]=TT [0][1]=TF [1][0]=FT [1][1]=FF
};

class UndefinedKappaError : public Error {
 public:
  explicit UndefinedKappaError(double observed)
      : Error("kappa undefined: chance agreement is 1 (both graders constant); observed agreement " +
              std::to_string(observed)),
        observed_(observed) {}
  double observed_agreement() const noexcept { return observed_; }

 private:
  double observed_;
};

inline Contingency contingency_of(std::span<const std::pair<bool, bool>> pairs) {
  Contingency c{};
  for (const auto& [a, b] : pairs) ++c[a ? 0 : 1][b ? 0 : 1];
  return c;
}

/// Cohen's kappa from counts. Computed as
///   (n * agree - sum_k a_k b_k) / (n^2 - sum_k a_k b_k)
/// in integers, so constructed tables give correctly rounded results.
inline AgreementReport cohens_kappa(const Contingency& c) {
  AgreementReport r;
  r.contingency = c;
  r.n = c[0][0] + c[0][1] + c[1][0] + c[1][1];
  if (r.n <= 0) throw ConfigError("cohens_kappa needs at least one pair");
  const std::int64_t agree = c[0][0] + c[1][1];
  const std::int64_t a_true = c[0][0] + c[0][1];
  const std::int64_t b_true = c[0][0] + c[1][0];
  const std::int64_t chance = a_true * b_true + (r.n - a_true) * (r.n - b_true);
  const std::int64_t n2 = r.n * r.n;
  const auto dn = static_cast<double>(r.n);
  r.observed_agreement = static_cast<double>(agree) / dn;
  r.chance_agreement = static_cast<double>(chance) / static_cast<double>(n2);
  if (chance == n2) throw UndefinedKappaError(r.observed_agreement);
  r.kappa = static_cast<double>(r.n * agree - chance) / static_cast<double>(n2 - chance);
  return r;
}

inline AgreementReport cohens_kappa(std::span<const std::pair<bool, bool>> pairs) {
  return cohens_kappa(contingency_of(pairs));
}

struct CategoryCount {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AccuracyReport {
  std::map<SubjectCategory, CategoryCount> categories;  // only non-empty ones
  CategoryCount overall_counts;
  double overall() const { return overall_counts.accuracy(); }
};

/// Majority-voted correctness for every item, in order. Votes use sample
/// indices 0..m-1; with m > 1 a remote judge is sampled at `vote_temperature`
/// so that votes can differ.
inline std::vector<bool> vote_correctness(const llm::JudgeBackend& backend,
                                          std::span<const llm::JudgeItem> items, int m,
                                          double vote_temperature = kDefaultVoteTemperature) {
  if (m < 1) throw ConfigError("m must be >= 1");
  const auto voter = m > 1 ? llm::with_temperature(backend, vote_temperature) : backend;
  std::vector<std::vector<Judgment>> votes(items.size());
  for (int s = 0; s < m; ++s) {
    const auto round = llm::judge_many(voter, items, s);
    for (std::size_t i = 0; i < items.size(); ++i) votes[i].push_back(round[i]);
  }
  std::vector<bool> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[i] = majority_vote(votes[i]);
  return out;
}

/// Greedy response per test prompt, judged with m votes, aggregated per
/// subject category.
inline AccuracyReport evaluate_policy(const Policy& policy, std::span<const PromptInstance> test,
                                      const llm::JudgeBackend& backend, int m,
                                      double vote_temperature = kDefaultVoteTemperature) {
  if (test.empty()) throw ConfigError("evaluate_policy: empty test set");
  std::vector<llm::JudgeItem> items;
  items.reserve(test.size());
  for (const auto& p : test) {
    const auto r = greedy_response(policy, prompt_feature(p.question, policy.params.features()), p.id);
    items.push_back({p.question, r.final_step, p.reference});
  }
  const auto correct = vote_correctness(backend, items, m, vote_temperature);
  AccuracyReport report;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& cat = report.categories[category_of(test[i])];
    ++cat.total;
    ++report.overall_counts.total;
    if (correct[i]) {
      ++cat.correct;
      ++report.overall_counts.correct;
    }
  }
  return report;
}

/// Grader A votes once per item; grader B is majority-voted over m samples.
inline AgreementReport agreement_experiment(const llm::JudgeBackend& grader_a,
                                            const llm::JudgeBackend& grader_b,
                                            std::span<const llm::JudgeItem> items, int m,
                                            double vote_temperature = kDefaultVoteTemperature) {
  if (m < 1) throw ConfigError("m must be >= 1");
  const auto a = vote_correctness(grader_a, items, 1);
  const auto b = vote_correctness(grader_b, items, m, vote_temperature);
  std::vector<std::pair<bool, bool>> pairs(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) pairs[i] = {a[i], b[i]};
  return cohens_kappa(pairs);
}

inline nlohmann::json to_json(const AccuracyReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [cat, c] : r.categories)
    cats[std::string(to_string(cat))] = {{"correct", c.correct}, {"total", c.total}, {"accuracy", c.accuracy()}};
  return {{"categories", cats},
          {"overall", {{"correct", r.overall_counts.correct},
                       {"total", r.overall_counts.total},
                       {"accuracy", r.overall()}}}};
}

inline nlohmann::json to_json(const AgreementReport& r) {
  const auto& c = r.contingency;
  return {{"kappa", r.kappa},
          {"observed_agreement", r.observed_agreement},
          {"chance_agreement", r.chance_agreement},
          {"n", r.n},
          {"contingency", {{"a_true_b_true", c[0][0]}, {"a_true_b_false", c[0][1]},
                           {"a_false_b_true", c[1][0]}, {"a_false_b_false", c[1][1]}}}};
}

}  // namespace rlvr::eval
