// SPDX-License-Identifier: Apache-2.0
//
// Free-form QA datasets: JSONL loading, seeded train/test/reward-model
// partitioning, disjointness auditing, and the subject taxonomy used for
// per-category reporting.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/core/random.hpp"
#include "rlvr/core/text.hpp"

namespace rlvr {

struct PromptInstance {
  std::string id;
  std::string question;
  std::string reference;
  std::optional<int> subject_id;

  friend bool operator==(const PromptInstance&, const PromptInstance&) = default;
};

struct DatasetSplit {
  std::vector<PromptInstance> train;
  std::vector<PromptInstance> test;
  std::vector<PromptInstance> rm_pool;
};

enum class SubjectCategory { STEM, SocialSciences, Humanities, AppliedSciences, Others };

inline constexpr std::array<SubjectCategory, 5> kAllCategories = {
    SubjectCategory::STEM, SubjectCategory::SocialSciences, SubjectCategory::Humanities,
    SubjectCategory::AppliedSciences, SubjectCategory::Others};

inline std::string_view to_string(SubjectCategory c) {
  switch (c) {
    case SubjectCategory::STEM: return "STEM";
    case SubjectCategory::SocialSciences: return "Social";
    case SubjectCategory::Humanities: return "Humanities";
    case SubjectCategory::AppliedSciences: return "Applied";
    case SubjectCategory::Others: return "Others";
  }
  return "Others";
}

struct Subject {
  int id;
  std::string_view name;
  SubjectCategory category;
};

// 999 ("Unclassified") is the only id outside the four broad categories.
inline constexpr std::array<Subject, 49> kSubjects = {{
    {110, "Mathematics", SubjectCategory::STEM},
    {120, "Information Science and System Science", SubjectCategory::STEM},
    {130, "Mechanics", SubjectCategory::STEM},
    {140, "Physics", SubjectCategory::STEM},
    {150, "Chemistry", SubjectCategory::STEM},
    {170, "Earth Science", SubjectCategory::STEM},
    {180, "Biology", SubjectCategory::STEM},
    {190, "Psychology", SubjectCategory::SocialSciences},
    {210, "Agronomy", SubjectCategory::AppliedSciences},
    {230, "Animal Husbandry and Veterinary Science", SubjectCategory::AppliedSciences},
    {310, "Basic Medicine", SubjectCategory::AppliedSciences},
    {320, "Clinical Medicine", SubjectCategory::AppliedSciences},
    {330, "Preventive Medicine and Public Health", SubjectCategory::AppliedSciences},
    {350, "Pharmacy", SubjectCategory::AppliedSciences},
    {360, "Chinese Medicine and Chinese Materia Medica", SubjectCategory::AppliedSciences},
    {413, "Information and System Science Related Engineering and Technology",
     SubjectCategory::AppliedSciences},
    {416, "Natural Science Related Engineering and Technology",
     SubjectCategory::AppliedSciences},
    {420, "Surveying and Mapping Science and Technology", SubjectCategory::AppliedSciences},
    {430, "Materials Science", SubjectCategory::STEM},
    {460, "Mechanical Engineering", SubjectCategory::STEM},
    {470, "Power and Electrical Engineering", SubjectCategory::STEM},
    {510, "Electronics and Communications Technology", SubjectCategory::STEM},
    {520, "Computer Science and Technology", SubjectCategory::STEM},
    {530, "Chemical Engineering", SubjectCategory::STEM},
    {550, "Food Science and Technology", SubjectCategory::AppliedSciences},
    {560, "Civil Engineering", SubjectCategory::STEM},
    {570, "Water Conservancy Engineering", SubjectCategory::STEM},
    {580, "Transportation Engineering", SubjectCategory::STEM},
    {610, "Environmental/Resource Science and Technology", SubjectCategory::STEM},
    {620, "Safety Science and Technology", SubjectCategory::STEM},
    {630, "Management", SubjectCategory::SocialSciences},
    {710, "Marxism", SubjectCategory::Humanities},
    {720, "Philosophy", SubjectCategory::Humanities},
    {730, "Religious Studies", SubjectCategory::Humanities},
    {740, "Linguistics", SubjectCategory::Humanities},
    {750, "Literature", SubjectCategory::Humanities},
    {760, "Art", SubjectCategory::Humanities},
    {770, "History", SubjectCategory::Humanities},
    {790, "Economics", SubjectCategory::SocialSciences},
    {810, "Political Science", SubjectCategory::SocialSciences},
    {820, "Law", SubjectCategory::SocialSciences},
    {840, "Sociology", SubjectCategory::SocialSciences},
    {850, "Ethnology and Cultural Studies", SubjectCategory::SocialSciences},
    {860, "Journalism and Communication", SubjectCategory::SocialSciences},
    {870, "Library, Information, and Documentation", SubjectCategory::SocialSciences},
    {880, "Education", SubjectCategory::SocialSciences},
    {890, "Sports Science", SubjectCategory::SocialSciences},
    {910, "Statistics", SubjectCategory::STEM},
    {999, "Unclassified", SubjectCategory::Others},
}};

inline constexpr int kUnclassifiedSubject = 999;

inline const Subject* find_subject(int id) {
  const auto it = std::find_if(kSubjects.begin(), kSubjects.end(),
                               [id](const Subject& s) { return s.id == id; });
  return it == kSubjects.end() ? nullptr : &*it;
}

/// Total: unknown ids fall into Others.
inline SubjectCategory subject_category(int subject_id) {
  const Subject* s = find_subject(subject_id);
  return s ? s->category : SubjectCategory::Others;
}

inline SubjectCategory category_of(const PromptInstance& p) {
  return p.subject_id ? subject_category(*p.subject_id) : SubjectCategory::Others;
}

namespace detail {

inline void validate_instance(const PromptInstance& p) {
  if (text::trim(p.question).empty())
    throw DataError("instance " + p.id + ": empty question");
  if (text::trim(p.reference).empty())
    throw DataError("instance " + p.id + ": empty reference");
}

}  // namespace detail

inline nlohmann::json to_json(const PromptInstance& p) {
  nlohmann::json j = {{"id", p.id}, {"question", p.question}, {"reference", p.reference}};
  if (p.subject_id) j["subject_id"] = *p.subject_id;
  return j;
}

/// Parses one JSONL object. `line_no` is zero-based and becomes the id when
/// the object carries none.
inline PromptInstance parse_instance(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(line_no + 1) + ": malformed JSON: " + e.what());
  }
  const auto where = [&] { return "line " + std::to_string(line_no + 1) + ": "; };
  if (!j.is_object()) throw DataError(where() + "expected a JSON object");
  PromptInstance p;
  if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
    p.id = it->is_string() ? it->get<std::string>() : it->dump();
  } else {
    p.id = std::to_string(line_no);
  }
  for (const char* key : {"question", "reference"}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw DataError(where() + "missing string field \"" + key + "\"");
  }
  p.question = j["question"].get<std::string>();
  p.reference = j["reference"].get<std::string>();
  if (auto it = j.find("subject_id"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw DataError(where() + "subject_id must be an integer");
    p.subject_id = it->get<int>();
  }
  detail::validate_instance(p);
  return p;
}

inline std::vector<PromptInstance> load_jsonl(std::istream& in) {
  std::vector<PromptInstance> out;
  std::unordered_set<std::string> seen;
  std::string line;
  for (std::size_t line_no = 0; std::getline(in, line); ++line_no) {
    if (text::trim(line).empty()) continue;
    auto p = parse_instance(line, line_no);
    if (!seen.insert(p.id).second) throw DataError("duplicate id " + p.id);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PromptInstance> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset not found: " + path);
  return load_jsonl(in);
}

inline void write_jsonl(std::ostream& out, const std::vector<PromptInstance>& data) {
  for (const auto& p : data) out << to_json(p).dump() << '\n';
}

/// Seeded partition into test, rm_pool and train. Counts are floored; the
/// remainder goes to train.
inline DatasetSplit split_dataset(const std::vector<PromptInstance>& data, double test_fraction,
                                  double rm_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw DataError("test_fraction must lie in (0, 1)");
  if (!(rm_fraction >= 0.0 && rm_fraction < 1.0))
    throw DataError("rm_fraction must lie in [0, 1)");
  if (!(test_fraction + rm_fraction < 1.0))
    throw DataError("test_fraction + rm_fraction must be < 1");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  const auto n = static_cast<double>(data.size());
  const auto n_test = static_cast<std::size_t>(std::floor(n * test_fraction));
  const auto n_rm = static_cast<std::size_t>(std::floor(n * rm_fraction));

  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& p = data[order[i]];
    if (i < n_test)
      split.test.push_back(p);
    else if (i < n_test + n_rm)
      split.rm_pool.push_back(p);
    else
      split.train.push_back(p);
  }
  return split;
}

inline bool ids_disjoint(const std::vector<PromptInstance>& a, const std::vector<PromptInstance>& b) {
  std::unordered_set<std::string_view> ids;
  for (const auto& p : a) ids.insert(p.id);
  return std::none_of(b.begin(), b.end(), [&](const PromptInstance& p) { return ids.count(p.id); });
}

/// True iff train, test and rm_pool share no ids pairwise.
inline bool audit_disjoint(const DatasetSplit& split) noexcept {
  try {
    return ids_disjoint(split.train, split.test) && ids_disjoint(split.train, split.rm_pool) &&
           ids_disjoint(split.test, split.rm_pool);
  } catch (...) {
    return false;
  }
}

}  // namespace rlvr
