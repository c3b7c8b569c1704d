// tests/unit/eval_test.cc

// Copyright 2026  diadfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "diadfuse/error.h"
#include "diadfuse/eval.h"
#include "diadfuse/rng.h"

namespace diadfuse::eval {
namespace {

using corpus::ConditionTag;
using corpus::LengthBin;
using corpus::Speaker;
using corpus::UttType;

constexpr int C = 0, A = 1;

// Brute force over the 2x2 table, written independently of Confusion.
double BruteF1(const std::vector<int> &p, const std::vector<int> &t) {
  double f = 0;
  for (int c = 0; c < 2; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      tp += p[i] == c && t[i] == c;
      fp += p[i] == c && t[i] != c;
      fn += p[i] != c && t[i] == c;
    }
    const double prec = tp + fp ? double(tp) / (tp + fp) : 0;
    const double rec = tp + fn ? double(tp) / (tp + fn) : 0;
    f += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
  }
  return f / 2;
}

TEST(F1Macro, Examples) {
  const std::vector<int> truth{C, A, C, A};
  EXPECT_DOUBLE_EQ(F1Macro(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(F1Macro(std::vector<int>{C, C, A, A}, truth), 0.5);
  const auto s = BinaryF1(std::vector<int>{A, A, A, A}, truth);
  EXPECT_NEAR(s.macro, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.per_class[A], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(s.per_class[C], 0.0);
  EXPECT_FALSE(s.undefined[C]);  // child is present in truth
}

TEST(F1Macro, AbsentClassFlagged) {
  const std::vector<int> all_adult{A, A, A};
  const auto s = BinaryF1(all_adult, all_adult);
  EXPECT_TRUE(s.undefined[C]);
  EXPECT_EQ(s.per_class[C], 0.0);
  EXPECT_DOUBLE_EQ(s.macro, 0.5);
}

TEST(F1Macro, Errors) {
  try {
    F1Macro(std::vector<int>{C}, std::vector<int>{C, A});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
  try {
    F1Macro(std::vector<int>{}, std::vector<int>{});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::EmptyInput);
  }
}

TEST(F1Macro, MatchesBruteForce) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.Below(40);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.Below(2));
      t[i] = static_cast<int>(rng.Below(2));
    }
    EXPECT_NEAR(F1Macro(p, t), BruteF1(p, t), 1e-12);
  }
}

TEST(Confusion, MergeIsAssociative) {
  Rng rng(22);
  Confusion whole, a, b;
  for (int i = 0; i < 300; ++i) {
    const int t = static_cast<int>(rng.Below(2)), p = static_cast<int>(rng.Below(2));
    whole.Add(t, p);
    (i % 3 ? a : b).Add(t, p);
  }
  Confusion merged = b;
  merged.Merge(a);
  for (int t = 0; t < 2; ++t) {
    for (int p = 0; p < 2; ++p) EXPECT_EQ(merged.Count(t, p), whole.Count(t, p));
  }
  EXPECT_EQ(merged.Scores().macro, whole.Scores().macro);
}

std::vector<std::string> Ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return ids;
}

TEST(SessionCvSplit, EightySevenSessions) {
  const auto folds = SessionCvSplit(Ids(87), 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<std::size_t> sizes;
  for (const auto &f : folds) sizes.push_back(f.test.size());
  std::sort(sizes.rbegin(), sizes.rend());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{18, 18, 17, 17, 17}));
}

TEST(SessionCvSplit, FiveSessions) {
  const auto folds = SessionCvSplit(Ids(5), 5, 9);
  std::set<std::string> seen;
  for (const auto &f : folds) {
    ASSERT_EQ(f.test.size(), 1u);
    seen.insert(f.test[0]);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(SessionCvSplit, Deterministic) {
  const auto a = SessionCvSplit(Ids(30), 5, 77);
  const auto b = SessionCvSplit(Ids(30), 5, 77);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(a[k].train, b[k].train);
    EXPECT_EQ(a[k].val, b[k].val);
    EXPECT_EQ(a[k].test, b[k].test);
  }
}

TEST(SessionCvSplit, TooFewSessions) {
  try {
    SessionCvSplit(Ids(4), 5, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::TooFewSessions);
  }
}

TEST(SessionCvSplit, PartitionPropertiesOverSeeds) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + static_cast<int>(rng.Below(120));
    const auto ids = Ids(n);
    const auto folds = SessionCvSplit(ids, 5, rng.Below(1u << 30));
    std::multiset<std::string> tests;
    for (int k = 0; k < 5; ++k) {
      const auto &f = folds[k];
      EXPECT_EQ(f.fold_index, k);
      EXPECT_EQ(f.val, folds[(k + 1) % 5].test);
      std::set<std::string> all(f.train.begin(), f.train.end());
      all.insert(f.val.begin(), f.val.end());
      all.insert(f.test.begin(), f.test.end());
      EXPECT_EQ(all.size(), f.train.size() + f.val.size() + f.test.size());  // disjoint
      EXPECT_EQ(all, std::set<std::string>(ids.begin(), ids.end()));
      const double share = 0.2 * n;
      EXPECT_LE(std::abs(double(f.test.size()) - share), 1.0);
      EXPECT_LE(std::abs(double(f.val.size()) - share), 1.0);
      EXPECT_LE(std::abs(double(f.train.size()) - 3 * share), 1.0);
      tests.insert(f.test.begin(), f.test.end());
    }
    EXPECT_EQ(tests, std::multiset<std::string>(ids.begin(), ids.end()));
  }
}

struct Row {
  const char *id;
  double dur;
  UttType type;
  ConditionTag tag;
  Speaker truth;
  Speaker fused;
};

// Eight scored utterances plus one Others record.
const Row kRows[] = {
    {"u0", 0.4, UttType::kSpeech, ConditionTag::kZeroFace, Speaker::kChild, Speaker::kChild},
    {"u1", 0.4, UttType::kSpeech, ConditionTag::kZeroFace, Speaker::kAdult, Speaker::kChild},
    {"u2", 1.2, UttType::kSpeech, ConditionTag::kOneFace, Speaker::kChild, Speaker::kChild},
    {"u3", 1.2, UttType::kNonverbalVocalization, ConditionTag::kOneFace, Speaker::kAdult,
     Speaker::kAdult},
    {"u4", 2.5, UttType::kNonverbalVocalization, ConditionTag::kOneFace, Speaker::kChild,
     Speaker::kAdult},
    {"u5", 2.5, UttType::kSpeech, ConditionTag::kTwoFaces, Speaker::kAdult, Speaker::kAdult},
    {"u6", 0.7, UttType::kSinging, ConditionTag::kTwoFaces, Speaker::kChild, Speaker::kChild},
    {"u7", 0.7, UttType::kSpeech, ConditionTag::kTwoFaces, Speaker::kAdult, Speaker::kAdult},
    {"u8", 1.0, UttType::kSpeech, ConditionTag::kOthers, Speaker::kAdult, Speaker::kChild},
};

corpus::Corpus FixtureCorpus() {
  corpus::Corpus c;
  corpus::Session s;
  s.id = "s";
  double t = 0;
  for (const Row &r : kRows) {
    s.utterances.push_back({r.id, "s", t, t + r.dur, r.truth, r.type, std::string(r.id) + "_a"});
    t += 5;
  }
  c.sessions.push_back(s);
  return c;
}

std::vector<fusion::FusionRecord> FixtureRecords() {
  std::vector<fusion::FusionRecord> out;
  for (const Row &r : kRows) {
    fusion::FusionRecord rec;
    rec.utterance_id = r.id;
    rec.condition.tag = r.tag;
    rec.y_true = r.truth;
    rec.y_hat = r.fused;
    rec.excluded = r.tag == ConditionTag::kOthers;
    // Audio always says adult.
    rec.p_a = {0.3, 0.7};
    out.push_back(rec);
  }
  return out;
}

TEST(StratifiedReport, HandFixture) {
  const auto rep = StratifiedReport(FixtureRecords(), FixtureCorpus());
  // Overall fused table: child 4 (tp 3, fn 1), adult 4 (tp 3, fp from u1 -> child).
  // F1(child) = 6/8, F1(adult) = 6/8.
  EXPECT_EQ(rep.scored, 8u);
  EXPECT_EQ(rep.excluded, 1u);
  EXPECT_NEAR(rep.f1_macro, 0.75, 1e-12);
  // ZeroFace: u0 C->C, u1 A->C: F1(C) = 2/3, F1(A) = 0.
  EXPECT_NEAR(*rep.by_condition.at(ConditionTag::kZeroFace).F1(), 1.0 / 3.0, 1e-12);
  // OneFace: u2 C->C, u3 A->A, u4 C->A: F1(C) = 2/3, F1(A) = 2/3.
  EXPECT_NEAR(*rep.by_condition.at(ConditionTag::kOneFace).F1(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*rep.by_condition.at(ConditionTag::kTwoFaces).F1(), 1.0, 1e-12);
  // OneFace nonverbal: u3 A->A, u4 C->A: F1(C) 0, F1(A) 2/3.
  EXPECT_NEAR(*rep.by_type.at(ConditionTag::kOneFace).at(TypeGroup::kNonverbal).F1(), 1.0 / 3.0,
              1e-12);
  EXPECT_EQ(rep.by_type.at(ConditionTag::kTwoFaces).at(TypeGroup::kOtherTypes).Support(), 1u);
  EXPECT_EQ(rep.by_length.at(ConditionTag::kZeroFace).at(LengthBin::kB1).Support(), 2u);
  EXPECT_EQ(rep.by_length.at(ConditionTag::kTwoFaces).at(LengthBin::kB2).Support(), 2u);
  EXPECT_EQ(rep.by_length.at(ConditionTag::kOneFace).at(LengthBin::kB4).Support(), 1u);
  EXPECT_FALSE(rep.by_length.at(ConditionTag::kOneFace).at(LengthBin::kB1).F1().has_value());

  std::size_t sum = 0;
  for (const auto &[tag, s] : rep.by_condition) sum += s.Support();
  EXPECT_EQ(sum, rep.scored);

  const auto audio = StratifiedReport(FixtureRecords(), FixtureCorpus(), System::kAudio);
  // Audio predicts adult everywhere: F1(A) = 2*4/(8+4) = 2/3, F1(C) = 0.
  EXPECT_NEAR(audio.f1_macro, 1.0 / 3.0, 1e-12);
}

TEST(StratifiedReport, OthersDoNotMoveHeadline) {
  auto records = FixtureRecords();
  const double with = StratifiedReport(records, FixtureCorpus()).f1_macro;
  records.pop_back();
  EXPECT_EQ(StratifiedReport(records, FixtureCorpus()).f1_macro, with);
}

TEST(StratifiedReport, SingleConditionLeavesOtherStrataEmpty) {
  auto records = FixtureRecords();
  records.erase(records.begin() + 2, records.end());
  const auto rep = StratifiedReport(records, FixtureCorpus());
  EXPECT_EQ(rep.by_condition.at(ConditionTag::kOneFace).Support(), 0u);
  EXPECT_EQ(rep.by_condition.at(ConditionTag::kTwoFaces).Support(), 0u);
  EXPECT_FALSE(rep.by_condition.at(ConditionTag::kTwoFaces).F1().has_value());
}

TEST(StratifiedReport, PermutationInvariant) {
  Rng rng(24);
  const auto corpus = FixtureCorpus();
  auto records = FixtureRecords();
  const std::string base = ReportToJson(StratifiedReport(records, corpus));
  for (int i = 0; i < 10; ++i) {
    rng.Shuffle(records);
    EXPECT_EQ(ReportToJson(StratifiedReport(records, corpus)), base);
  }
}

TEST(StratifiedReport, UnknownUtterance) {
  auto records = FixtureRecords();
  records[0].utterance_id = "nope";
  try {
    StratifiedReport(records, FixtureCorpus());
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::UnknownUtterance);
  }
}

TEST(StratifiedReport, JsonAndTables) {
  const auto rep = StratifiedReport(FixtureRecords(), FixtureCorpus());
  const auto j = nlohmann::json::parse(ReportToJson(rep));
  EXPECT_NEAR(j.at("f1_macro").get<double>(), 0.75, 1e-12);
  const std::string text = FormatTables({rep});
  EXPECT_NE(text.find("75.0"), std::string::npos);
  EXPECT_NE(text.find("other_types"), std::string::npos);
}

}  // namespace
}  // namespace diadfuse::eval
