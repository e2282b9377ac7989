// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "rlvr/dataset.hpp"

namespace rlvr {
namespace {

std::vector<PromptInstance> make_instances(int n) {
  std::vector<PromptInstance> out;
  for (int i = 0; i < n; ++i)
    out.push_back({"q" + std::to_string(i), "question " + std::to_string(i), "answer", std::nullopt});
  return out;
}

TEST(LoadJsonl, MapsFields) {
  std::istringstream in(R"({"id":"q1","question":"2+2?","reference":"4"})");
  const auto data = load_jsonl(in);
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0], (PromptInstance{"q1", "2+2?", "4", std::nullopt}));
}

TEST(LoadJsonl, PreservesOrderAndSynthesizesIds) {
  std::istringstream in(
      "{\"question\":\"a\",\"reference\":\"1\",\"subject_id\":110}\n"
      "{\"id\":\"x\",\"question\":\"b\",\"reference\":\"2\",\"extra\":[1,2]}\n"
      "{\"question\":\"c\",\"reference\":\"3\"}\n");
  const auto data = load_jsonl(in);
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[0].id, "0");
  EXPECT_EQ(data[0].subject_id, 110);
  EXPECT_EQ(data[1].id, "x");
  EXPECT_EQ(data[2].id, "2");
  EXPECT_EQ(data[2].question, "c");
}

TEST(LoadJsonl, RejectsDuplicateIds) {
  std::istringstream in(
      "{\"id\":\"q1\",\"question\":\"a\",\"reference\":\"1\"}\n"
      "{\"id\":\"q1\",\"question\":\"b\",\"reference\":\"2\"}\n");
  try {
    load_jsonl(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate id q1"), std::string::npos);
  }
}

TEST(LoadJsonl, MalformedLineReportsLineNumber) {
  std::istringstream in("{\"question\":\"a\",\"reference\":\"1\"}\n{not json\n");
  try {
    load_jsonl(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadJsonl, EmptyReferenceNamesInstance) {
  std::istringstream in(R"({"id":"bad","question":"a","reference":"   "})");
  try {
    load_jsonl(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

TEST(LoadJsonl, MissingFileIsDataError) {
  EXPECT_THROW(load_jsonl(std::string("/nonexistent/file.jsonl")), DataError);
}

TEST(SplitDataset, FloorCountsAndDisjointness) {
  const auto split = split_dataset(make_instances(10), 0.2, 0.2, 7);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(split.rm_pool.size(), 2u);
  EXPECT_EQ(split.train.size(), 6u);
  std::set<std::string> ids;
  for (const auto* part : {&split.train, &split.test, &split.rm_pool})
    for (const auto& p : *part) EXPECT_TRUE(ids.insert(p.id).second) << p.id;
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_TRUE(audit_disjoint(split));
}

TEST(SplitDataset, LeftoverGoesToTrain) {
  const auto split = split_dataset(make_instances(7), 0.3, 0.3, 1);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(split.rm_pool.size(), 2u);
  EXPECT_EQ(split.train.size(), 3u);
}

TEST(SplitDataset, ZeroRmFractionLeavesPoolEmpty) {
  const auto split = split_dataset(make_instances(10), 0.5, 0.0, 3);
  EXPECT_TRUE(split.rm_pool.empty());
  EXPECT_EQ(split.test.size(), 5u);
}

TEST(SplitDataset, RejectsBadFractions) {
  const auto data = make_instances(10);
  EXPECT_THROW(split_dataset(data, 0.0, 0.1, 1), DataError);
  EXPECT_THROW(split_dataset(data, 1.0, 0.0, 1), DataError);
  EXPECT_THROW(split_dataset(data, 0.5, -0.1, 1), DataError);
  EXPECT_THROW(split_dataset(data, 0.6, 0.4, 1), DataError);
}

// Property: determinism and conservation of ids over many sizes and seeds.
TEST(SplitDataset, DeterministicAndConservesIds) {
  for (int n : {0, 1, 5, 17, 100}) {
    const auto data = make_instances(n);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto a = split_dataset(data, 0.25, 0.15, seed);
      const auto b = split_dataset(data, 0.25, 0.15, seed);
      EXPECT_EQ(a.train, b.train);
      EXPECT_EQ(a.test, b.test);
      EXPECT_EQ(a.rm_pool, b.rm_pool);
      std::multiset<std::string> got;
      for (const auto* part : {&a.train, &a.test, &a.rm_pool})
        for (const auto& p : *part) got.insert(p.id);
      std::multiset<std::string> want;
      for (const auto& p : data) want.insert(p.id);
      EXPECT_EQ(got, want);
      EXPECT_TRUE(audit_disjoint(a));
    }
  }
}

TEST(SplitDataset, SeedChangesOrder) {
  const auto data = make_instances(50);
  EXPECT_NE(split_dataset(data, 0.2, 0.0, 1).test, split_dataset(data, 0.2, 0.0, 2).test);
}

TEST(AuditDisjoint, DetectsOverlap) {
  DatasetSplit split;
  EXPECT_TRUE(audit_disjoint(split));
  split.train = {{"q1", "a", "b", std::nullopt}};
  split.rm_pool = {{"q2", "a", "b", std::nullopt}};
  EXPECT_TRUE(audit_disjoint(split));
  split.rm_pool.push_back({"q1", "c", "d", std::nullopt});
  EXPECT_FALSE(audit_disjoint(split));
  split.rm_pool.pop_back();
  split.test = {{"q2", "x", "y", std::nullopt}};
  EXPECT_FALSE(audit_disjoint(split));
}

TEST(SubjectCategory, SpotValues) {
  EXPECT_EQ(subject_category(110), SubjectCategory::STEM);
  EXPECT_EQ(subject_category(190), SubjectCategory::SocialSciences);
  EXPECT_EQ(subject_category(999), SubjectCategory::Others);
  EXPECT_EQ(subject_category(12345), SubjectCategory::Others);
  EXPECT_EQ(subject_category(-1), SubjectCategory::Others);
}

// Exhaustive check against the published four-way grouping.
TEST(SubjectCategory, MatchesPublishedTable) {
  const std::vector<int> stem = {110, 120, 130, 140, 150, 170, 180, 430, 460, 470,
                                 510, 520, 530, 560, 570, 580, 610, 620, 910};
  const std::vector<int> social = {190, 790, 810, 820, 840, 850, 860, 870, 880, 890, 630};
  const std::vector<int> humanities = {710, 720, 730, 740, 750, 760, 770};
  const std::vector<int> applied = {210, 230, 310, 320, 330, 350, 360, 413, 416, 420, 550};
  std::set<int> listed;
  for (int id : stem) EXPECT_EQ(subject_category(id), SubjectCategory::STEM) << id;
  for (int id : social) EXPECT_EQ(subject_category(id), SubjectCategory::SocialSciences) << id;
  for (int id : humanities) EXPECT_EQ(subject_category(id), SubjectCategory::Humanities) << id;
  for (int id : applied) EXPECT_EQ(subject_category(id), SubjectCategory::AppliedSciences) << id;
  for (const auto* group : {&stem, &social, &humanities, &applied})
    for (int id : *group) EXPECT_TRUE(listed.insert(id).second) << "listed twice: " << id;
  EXPECT_EQ(listed.size(), 48u);
  for (const auto& s : kSubjects) {
    if (s.id == kUnclassifiedSubject) continue;
    EXPECT_TRUE(listed.count(s.id)) << "subject table has unlisted id " << s.id;
  }
}

}  // namespace
}  // namespace rlvr
