// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr::rl {

/// (question, reference, response, label) harvested from a teacher judge
/// during exploration; training data for a compact reward model.
struct DistillRecord {
  std::string prompt_id;
  std::string question;
  std::string reference;
  std::string response;
  int label = 0;
  double teacher_confidence = 0.0;

  friend bool operator==(const DistillRecord&, const DistillRecord&) = default;
};

/// Only definite verdicts become records.
inline std::optional<DistillRecord> make_distill_record(const PromptInstance& prompt,
                                                        std::string response, const Judgment& j) {
  if (j.verdict == Verdict::Invalid) return std::nullopt;
  return DistillRecord{prompt.id, prompt.question, prompt.reference, std::move(response),
                       j.verdict == Verdict::Correct ? 1 : 0, j.confidence};
}

inline nlohmann::json to_json(const DistillRecord& r) {
  return {{"prompt_id", r.prompt_id},   {"question", r.question}, {"reference", r.reference},
          {"response", r.response},     {"label", r.label},
          {"teacher_confidence", r.teacher_confidence}};
}

inline DistillRecord distill_from_json(const nlohmann::json& j) {
  DistillRecord r;
  r.prompt_id = j.value("prompt_id", std::string());
  r.question = j.at("question").get<std::string>();
  r.reference = j.at("reference").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.label = j.at("label").get<int>();
  r.teacher_confidence = j.at("teacher_confidence").get<double>();
  if (r.label != 0 && r.label != 1) throw DataError("distill label must be 0 or 1");
  return r;
}

/// Writes one JSON object per line. Any record whose prompt id belongs to
/// `forbidden` (the policy's training prompts) aborts the write before the
/// file is touched.
inline void write_distill(std::span<const DistillRecord> records, const std::string& path,
                          std::span<const PromptInstance> forbidden = {}) {
  std::unordered_set<std::string_view> blocked;
  for (const auto& p : forbidden) blocked.insert(p.id);
  std::vector<std::string> offending;
  std::unordered_set<std::string_view> reported;
  for (const auto& r : records) {
    if (blocked.count(r.prompt_id) && reported.insert(r.prompt_id).second)
      offending.push_back(r.prompt_id);
  }
  if (!offending.empty()) throw SeparationError(std::move(offending));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write distill file " + path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<DistillRecord> read_distill(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("distill file not found: " + path);
  std::vector<DistillRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(distill_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rlvr::rl
