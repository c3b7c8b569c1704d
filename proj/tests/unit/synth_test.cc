// tests/unit/synth_test.cc

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

#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "diadfuse/corpus.h"
#include "diadfuse/error.h"
#include "diadfuse/synth.h"

namespace diadfuse::synth {
namespace {

namespace fs = std::filesystem;
using corpus::ConditionTag;

SynthConfig Small(std::uint64_t seed) {
  SynthConfig c;
  c.n_sessions = 4;
  c.utterances_per_session = 30;
  c.audio_dim = 6;
  c.visual_dim = 5;
  c.seed = seed;
  return c;
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> DirBytes(const fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return out;
}

fs::path Fresh(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("diadfuse_synth_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Generate, ByteIdenticalForSameSeed) {
  const fs::path a = Fresh("a"), b = Fresh("b"), c = Fresh("c");
  corpus::WriteCorpus(Generate(Small(3)), a);
  corpus::WriteCorpus(Generate(Small(3)), b);
  corpus::WriteCorpus(Generate(Small(4)), c);
  const auto ba = DirBytes(a);
  EXPECT_GT(ba.size(), 10u);
  EXPECT_EQ(ba, DirBytes(b));
  EXPECT_NE(ba, DirBytes(c));
}

TEST(Generate, PassesCorpusValidation) {
  const fs::path dir = Fresh("valid");
  const fs::path manifest = corpus::WriteCorpus(Generate(Small(8)), dir);
  const corpus::Corpus back = corpus::LoadManifest(manifest);
  EXPECT_EQ(back.sessions.size(), 4u);
  EXPECT_EQ(back.audio_layers, 3);
  const corpus::Corpus pre = corpus::Preprocess(back);
  for (const auto &s : pre.sessions) {
    for (const auto &u : s.utterances) EXPECT_NO_THROW(corpus::GetLengthBin(u));
  }
}

TEST(Generate, ProportionsAtTenThousand) {
  SynthConfig cfg;
  cfg.n_sessions = 100;
  cfg.utterances_per_session = 100;
  cfg.audio_dim = 2;
  cfg.audio_layers = 1;
  cfg.visual_dim = 2;
  cfg.seed = 12;
  const corpus::Corpus c = Generate(cfg);
  const double n = static_cast<double>(c.UtteranceCount());
  ASSERT_EQ(c.UtteranceCount(), 10000u);
  const auto counts = corpus::ConditionCounts(c);
  const ConditionTag tags[] = {ConditionTag::kZeroFace, ConditionTag::kOneFace,
                               ConditionTag::kTwoFaces, ConditionTag::kOthers};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(counts.at(tags[i]) / n, cfg.condition_mix[i], 0.02) << i;
  }
  std::array<double, 4> types{};
  std::size_t child = 0;
  for (const auto &s : c.sessions) {
    for (const auto &u : s.utterances) {
      types[static_cast<int>(u.type)] += 1;
      child += u.speaker == corpus::Speaker::kChild;
    }
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(types[i] / n, cfg.type_mix[i], 0.02) << i;
  EXPECT_NEAR(child / n, cfg.child_fraction, 0.03);
}

TEST(Generate, PreprocessPathsExercised) {
  SynthConfig cfg = Small(6);
  cfg.utterances_per_session = 200;
  const corpus::Corpus raw = Generate(cfg);
  const corpus::Corpus pre = corpus::Preprocess(raw);
  EXPECT_LT(pre.UtteranceCount(), raw.UtteranceCount());
  bool truncated = false;
  for (const auto &s : raw.sessions) {
    for (const auto &u : s.utterances) truncated |= u.DurationMs() > corpus::kMaxDurationMs;
  }
  EXPECT_TRUE(truncated);
}

TEST(SynthConfig, Validation) {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    try {
      c.Validate();
    } catch (const Error &e) {
      return e.code() == Errc::InvalidConfig;
    }
    return false;
  };
  EXPECT_NO_THROW(SynthConfig{}.Validate());
  EXPECT_TRUE(bad([](SynthConfig &c) { c.condition_mix = {0.5, 0.5, 0.5, 0}; }));
  EXPECT_TRUE(bad([](SynthConfig &c) { c.type_mix = {1.0, -0.1, 0.1, 0.0}; }));
  EXPECT_TRUE(bad([](SynthConfig &c) { c.audio_frame_rate = 30; }));
  EXPECT_TRUE(bad([](SynthConfig &c) { c.separability = 1.5; }));
  EXPECT_TRUE(bad([](SynthConfig &c) { c.visual_informativeness = -0.1; }));
  EXPECT_TRUE(bad([](SynthConfig &c) { c.n_sessions = 0; }));
}

TEST(SynthConfig, JsonRoundTripAndStrictKeys) {
  SynthConfig c = Small(99);
  c.separability = 0.25;
  c.condition_mix = {0.1, 0.2, 0.3, 0.4};
  const SynthConfig back = SynthConfigFromJson(ToJson(c));
  EXPECT_EQ(ToJson(back), ToJson(c));
  EXPECT_EQ(back.seed, 99u);
  try {
    SynthConfigFromJson(R"({"sepparability": 0.5})");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::InvalidConfig);
  }
}

TEST(DegradeAudio, ZeroIsIdentityAndVisualUntouched) {
  const corpus::Corpus c = Generate(Small(2));
  const corpus::Corpus same = DegradeAudio(c, 0.0, 5);
  const corpus::Corpus noisy = DegradeAudio(c, 0.7, 5);
  const corpus::Corpus again = DegradeAudio(c, 0.7, 5);
  for (const auto &s : c.sessions) {
    for (const auto &u : s.utterances) {
      EXPECT_TRUE(same.Embedding(u.audio_ref) == c.Embedding(u.audio_ref));
      EXPECT_FALSE(noisy.Embedding(u.audio_ref) == c.Embedding(u.audio_ref));
      EXPECT_TRUE(noisy.Embedding(u.audio_ref) == again.Embedding(u.audio_ref));
    }
    for (const auto &t : s.face_tracks) {
      EXPECT_TRUE(noisy.Embedding(t.visual_ref) == c.Embedding(t.visual_ref));
    }
  }
  EXPECT_THROW(DegradeAudio(c, -1.0, 5), Error);
}

}  // namespace
}  // namespace diadfuse::synth
