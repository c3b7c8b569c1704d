// include/diadfuse/corpus.h

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

#ifndef DIADFUSE_CORPUS_H_
#define DIADFUSE_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diadfuse/nn/tensor.h"

namespace diadfuse::corpus {

enum class Speaker { kChild, kAdult };
enum class UttType { kSpeech, kNonverbalVocalization, kUnintelligible, kSinging };
enum class Identity { kChild, kAdult, kThirdPerson, kUnclear };
enum class ConditionTag { kZeroFace, kOneFace, kTwoFaces, kOthers };
enum class LengthBin { kB1, kB2, kB3, kB4 };

std::string_view ToString(Speaker s);
std::string_view ToString(UttType t);
std::string_view ToString(Identity i);
std::string_view ToString(ConditionTag c);
std::string_view ToString(LengthBin b);
Speaker ParseSpeaker(std::string_view s);
UttType ParseUttType(std::string_view s);
Identity ParseIdentity(std::string_view s);
ConditionTag ParseCondition(std::string_view s);

inline constexpr int kBracketCount = 9;
using BracketDist = std::array<double, kBracketCount>;

inline constexpr double kDefaultVideoFps = 25.0;
inline constexpr std::int64_t kMinDurationMs = 300;
inline constexpr std::int64_t kMaxDurationMs = 3000;

// Timestamps are carried at millisecond resolution; all duration and
// containment comparisons are made on the rounded integer milliseconds.
std::int64_t ToMs(double seconds);

struct Utterance {
  std::string id;
  std::string session_id;
  double t_start = 0.0;
  double t_end = 0.0;
  Speaker speaker = Speaker::kAdult;
  UttType type = UttType::kSpeech;
  std::string audio_ref;

  std::int64_t DurationMs() const { return ToMs(t_end) - ToMs(t_start); }
  double Duration() const { return static_cast<double>(DurationMs()) / 1000.0; }
};

struct FaceTrack {
  std::string id;
  std::string session_id;
  double tau_start = 0.0;
  double tau_end = 0.0;
  Identity identity = Identity::kUnclear;
  double frame_rate = kDefaultVideoFps;
  std::string visual_ref;
  std::vector<BracketDist> bracket_dists;
};

struct VisualCondition {
  ConditionTag tag = ConditionTag::kZeroFace;
  std::optional<std::string> child_track;
  std::optional<std::string> adult_track;
};

struct Session {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<FaceTrack> face_tracks;
  std::string metadata_json = "{}";
};

using EmbeddingPtr = std::shared_ptr<const nn::Tensor2>;

struct Corpus {
  std::vector<Session> sessions;
  std::map<std::string, EmbeddingPtr> embeddings;
  int audio_layers = 1;
  double audio_frame_rate = 50.0;
  double video_frame_rate = kDefaultVideoFps;

  const nn::Tensor2 &Embedding(const std::string &key) const;
  const Session *FindSession(std::string_view id) const;
  const FaceTrack *FindTrack(const Session &session, std::string_view track_id) const;
  std::size_t UtteranceCount() const;
  std::vector<std::string> SessionIds() const;
  // Number of audio frames per video frame; requires an integer ratio.
  int AudioVideoRatio() const;
};

// Reads a manifest and every embedding it references. Enforces all type
// invariants; throws MissingEmbedding, SchemaViolation or TimestampOrder.
Corpus LoadManifest(const std::filesystem::path &path);

// Writes manifest.json plus one DFEM (f32) file per embedding under
// <dir>/<embedding_dir>. Returns the manifest path.
std::filesystem::path WriteCorpus(const Corpus &corpus, const std::filesystem::path &dir,
                                  const std::string &embedding_dir = "embeddings");

bool TrackCovers(const FaceTrack &track, const Utterance &utt);

VisualCondition ClassifyVisualCondition(const Utterance &utt,
                                        const std::vector<FaceTrack> &tracks);

// Drops utterances of 0.3 s or less and keeps the first 3 s of longer ones,
// truncating their audio rows to match.
Corpus Preprocess(const Corpus &corpus);

LengthBin GetLengthBin(const Utterance &utt);

// Table-2 style counts over all utterances.
std::map<ConditionTag, std::size_t> ConditionCounts(const Corpus &corpus);

// Validates invariants of an in-memory corpus (same checks as loading).
void Validate(const Corpus &corpus);

}  // namespace diadfuse::corpus

#endif  // DIADFUSE_CORPUS_H_
