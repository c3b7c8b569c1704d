// tests/unit/fusion_test.cc

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
#include <filesystem>

#include <gtest/gtest.h>

#include "diadfuse/error.h"
#include "diadfuse/face-prior.h"
#include "diadfuse/fusion.h"
#include "diadfuse/rng.h"

namespace diadfuse {
namespace {

using corpus::BracketDist;
using corpus::ConditionTag;
using corpus::Speaker;
using fusion::ProbPair;

constexpr double kTol = 1e-12;

BracketDist OneHot(int k) {
  BracketDist d{};
  d[k] = 1.0;
  return d;
}

// A distribution whose child mass (brackets 0..2) is exactly p.
BracketDist WithChildMass(double p) {
  BracketDist d{};
  d[1] = p;
  d[6] = 1.0 - p;
  return d;
}

BracketDist RandomDist(Rng &rng) {
  BracketDist d{};
  double sum = 0;
  for (auto &v : d) sum += (v = rng.Uniform(0, 1));
  for (auto &v : d) v /= sum;
  return d;
}

corpus::FaceTrack TrackOf(std::vector<BracketDist> dists) {
  corpus::FaceTrack t;
  t.id = "t";
  t.bracket_dists = std::move(dists);
  return t;
}

TEST(FacePrior, BracketExamples) {
  EXPECT_DOUBLE_EQ(face::BracketToChildProb(OneHot(0)), 1.0);
  EXPECT_DOUBLE_EQ(face::BracketToChildProb(OneHot(8)), 0.0);
  BracketDist uniform;
  uniform.fill(1.0 / 9.0);
  EXPECT_NEAR(face::BracketToChildProb(uniform), 1.0 / 3.0, kTol);
}

TEST(FacePrior, RejectsNonDistributions) {
  BracketDist d = OneHot(0);
  d[1] = 0.5;
  EXPECT_THROW(face::BracketToChildProb(d), Error);
  d = OneHot(0);
  d[0] = 1.2;
  d[4] = -0.2;
  try {
    face::BracketToChildProb(d);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::NotADistribution);
  }
}

TEST(FacePrior, TrackExamples) {
  EXPECT_NEAR(face::TrackChildProb(TrackOf({OneHot(0), OneHot(8)})).p_child, 0.5, kTol);
  const auto single = face::TrackChildProb(TrackOf({WithChildMass(0.37)}));
  EXPECT_NEAR(single.p_child, 0.37, kTol);
  EXPECT_EQ(single.n_images, 1u);
  const auto three = face::TrackChildProb(
      TrackOf({WithChildMass(0.9), WithChildMass(0.8), WithChildMass(0.7)}));
  EXPECT_NEAR(three.p_child, 0.8, kTol);
  EXPECT_EQ(three.n_images, 3u);
  EXPECT_EQ(three.track_id, "t");
}

TEST(FacePrior, EmptyTrack) {
  try {
    face::TrackChildProb(TrackOf({}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::EmptyTrack);
  }
}

TEST(FacePrior, PermutationInvariantAndBounded) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BracketDist> ds(1 + rng.Below(12));
    double lo = 1, hi = 0;
    for (auto &d : ds) {
      d = RandomDist(rng);
      const double p = face::BracketToChildProb(d);
      EXPECT_NEAR(p + face::BracketToAdultProb(d), 1.0, kTol);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    const double a = face::TrackChildProb(TrackOf(ds)).p_child;
    rng.Shuffle(ds);
    const double b = face::TrackChildProb(TrackOf(ds)).p_child;
    EXPECT_NEAR(a, b, kTol);
    EXPECT_GE(a, lo - kTol);
    EXPECT_LE(a, hi + kTol);
  }
}

TEST(FuseOneFace, Examples) {
  EXPECT_NEAR(fusion::FuseOneFace(1.0, 0.9).child, 0.9, kTol);
  for (double p : {0.0, 0.13, 0.5, 0.99}) {
    EXPECT_NEAR(fusion::FuseOneFace(0.5, p).child, 0.5, kTol);
  }
  const ProbPair r = fusion::FuseOneFace(0.8, 0.9);
  EXPECT_NEAR(r.child, 0.74, kTol);
  EXPECT_NEAR(r.adult, 0.26, kTol);
}

TEST(FuseOneFace, Symmetries) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.Uniform(0, 1), p = rng.Uniform(0, 1);
    const ProbPair r = fusion::FuseOneFace(s, p);
    EXPECT_NEAR(fusion::FuseOneFace(s, 1 - p).child, 1 - r.child, kTol);
    EXPECT_NEAR(fusion::FuseOneFace(p, s).child, r.child, kTol);
    EXPECT_NEAR(r.child + r.adult, 1.0, kTol);
    EXPECT_GE(r.child, 0.0);
    EXPECT_LE(r.child, 1.0);
  }
}

TEST(FuseTwoFaces, Examples) {
  ProbPair r = fusion::FuseTwoFaces(0.7, 0.3, 1.0, 0.0);
  EXPECT_NEAR(r.child, 0.7, kTol);
  EXPECT_NEAR(r.adult, 0.3, kTol);
  r = fusion::FuseTwoFaces(0.5, 0.5, 0.5, 0.5);
  EXPECT_NEAR(r.child, 0.5, kTol);
  EXPECT_NEAR(r.adult, 0.5, kTol);
  r = fusion::FuseTwoFaces(0.8, 0.2, 0.9, 0.2);
  EXPECT_NEAR(r.child, 0.76, kTol);
  EXPECT_NEAR(r.adult, 0.24, kTol);
}

TEST(FuseTwoFaces, UnnormalizedPair) {
  try {
    fusion::FuseTwoFaces(0.7, 0.4, 0.5, 0.5);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::UnnormalizedSpeakerPair);
  }
  EXPECT_NO_THROW(fusion::FuseTwoFaces(0.7, 0.3 + 5e-7, 0.5, 0.5));
}

TEST(FuseTwoFaces, SumsToOneAndBounded) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.Uniform(0, 1);
    const ProbPair r =
        fusion::FuseTwoFaces(s, 1 - s, rng.Uniform(0, 1), rng.Uniform(0, 1));
    EXPECT_NEAR(r.child + r.adult, 1.0, kTol);
    EXPECT_GE(r.child, 0.0);
    EXPECT_LE(r.child, 1.0);
  }
}

TEST(FuseFinal, Examples) {
  EXPECT_EQ(fusion::FuseFinal({0.7, 0.3}, {0.6, 0.4}), Speaker::kChild);
  EXPECT_EQ(fusion::FuseFinal({0.5, 0.5}, {0.5, 0.5}), Speaker::kAdult);
  EXPECT_EQ(fusion::FuseFinal({0.5, 0.5}, {0.45, 0.55}), Speaker::kAdult);
  EXPECT_EQ(fusion::FuseFinal({0.5, 0.5}, {0.55, 0.45}), Speaker::kChild);
}

TEST(FuseFinal, NeutralVisionAndScaleInvariance) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.Uniform(0, 1);
    const ProbPair pa{a, 1 - a};
    EXPECT_EQ(fusion::FuseFinal({0.5, 0.5}, pa), fusion::AudioDecision(pa));
    const double c = rng.Uniform(0, 1), k = rng.Uniform(0.1, 1.0);
    const ProbPair asd{c, 1 - c};
    EXPECT_EQ(fusion::FuseFinal({k * asd.child, k * asd.adult}, pa), fusion::FuseFinal(asd, pa));
  }
}

fusion::UtteranceEvidence Evidence(ConditionTag tag, ProbPair pa) {
  fusion::UtteranceEvidence ev;
  ev.utterance_id = "u";
  ev.condition.tag = tag;
  ev.p_a = pa;
  ev.y_true = Speaker::kChild;
  return ev;
}

TEST(ClassifyUtterance, ZeroFaceIsAudio) {
  const auto r = fusion::ClassifyUtterance(Evidence(ConditionTag::kZeroFace, {0.9, 0.1}));
  EXPECT_EQ(r.y_hat, Speaker::kChild);
  EXPECT_FALSE(r.p_asd.has_value());
  EXPECT_TRUE(r.p_spk.empty());
  EXPECT_TRUE(r.p_im.empty());
  EXPECT_FALSE(r.excluded);
}

TEST(ClassifyUtterance, OneFaceNeutralSpeakerIsAudio) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.Uniform(0, 1);
    auto ev = Evidence(ConditionTag::kOneFace, {a, 1 - a});
    ev.one_face = fusion::OneFaceEvidence{0.5, {"t", rng.Uniform(0, 1), 3}};
    const auto r = fusion::ClassifyUtterance(ev);
    EXPECT_EQ(r.y_hat, fusion::AudioDecision(ev.p_a));
    ASSERT_TRUE(r.p_asd.has_value());
    EXPECT_NEAR(r.p_asd->child, 0.5, kTol);
  }
}

TEST(ClassifyUtterance, TwoFacesWorkedExample) {
  auto ev = Evidence(ConditionTag::kTwoFaces, {0.4, 0.6});
  fusion::TwoFaceEvidence two;
  two.p_spk1 = 0.8;
  two.p_spk2 = 0.2;
  two.prior1 = {"t1", 0.9, 4};
  two.prior2 = {"t2", 0.2, 4};
  ev.two_faces = two;
  const auto r = fusion::ClassifyUtterance(ev);
  // 0.76 * 0.4 = 0.304 > 0.24 * 0.6 = 0.144, overturning the audio decision.
  EXPECT_EQ(r.y_hat, Speaker::kChild);
  EXPECT_EQ(fusion::AudioDecision(ev.p_a), Speaker::kAdult);
  ASSERT_EQ(r.p_spk.size(), 2u);
  ASSERT_EQ(r.p_im.size(), 2u);
  EXPECT_NEAR(r.p_asd->child, 0.76, kTol);
}

TEST(ClassifyUtterance, OthersExcludedAudioDecision) {
  const auto r = fusion::ClassifyUtterance(Evidence(ConditionTag::kOthers, {0.2, 0.8}));
  EXPECT_EQ(r.y_hat, Speaker::kAdult);
  EXPECT_TRUE(r.excluded);
}

TEST(ClassifyUtterance, MissingEvidence) {
  EXPECT_THROW(fusion::ClassifyUtterance(Evidence(ConditionTag::kOneFace, {0.5, 0.5})), Error);
  EXPECT_THROW(fusion::ClassifyUtterance(Evidence(ConditionTag::kTwoFaces, {0.5, 0.5})), Error);
}

TEST(FusionRecord, JsonLinesRoundTrip) {
  auto ev = Evidence(ConditionTag::kTwoFaces, {0.123456789012345, 0.876543210987655});
  fusion::TwoFaceEvidence two;
  two.p_spk1 = 0.3;
  two.p_spk2 = 0.7;
  two.prior1 = {"t1", 0.61, 2};
  two.prior2 = {"t2", 0.05, 7};
  two.source = fusion::TwoFaceSource::kIndividual;
  two.degenerate = true;
  ev.two_faces = two;
  ev.condition.child_track = "t1";
  ev.condition.adult_track = "t2";
  const auto r = fusion::ClassifyUtterance(ev);
  const auto back = fusion::FromJsonLine(fusion::ToJsonLine(r));
  EXPECT_EQ(back.utterance_id, r.utterance_id);
  EXPECT_EQ(back.condition.tag, r.condition.tag);
  EXPECT_EQ(back.condition.adult_track, "t2");
  EXPECT_EQ(back.p_a.child, r.p_a.child);
  EXPECT_EQ(back.p_spk, r.p_spk);
  ASSERT_EQ(back.p_im.size(), 2u);
  EXPECT_EQ(back.p_im[1].n_images, 7u);
  EXPECT_EQ(back.p_asd->adult, r.p_asd->adult);
  EXPECT_EQ(back.two_face_source, fusion::TwoFaceSource::kIndividual);
  EXPECT_TRUE(back.degenerate);
  EXPECT_EQ(back.y_hat, r.y_hat);
  EXPECT_EQ(back.y_true, r.y_true);

  const auto path = std::filesystem::temp_directory_path() / "diadfuse_records.jsonl";
  fusion::WriteRecords(path, {r, r});
  EXPECT_EQ(fusion::ReadRecords(path).size(), 2u);
  EXPECT_THROW(fusion::FromJsonLine("{\"utterance_id\": 3}"), Error);
}

}  // namespace
}  // namespace diadfuse
