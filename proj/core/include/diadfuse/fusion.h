// include/diadfuse/fusion.h

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

#ifndef DIADFUSE_FUSION_H_
#define DIADFUSE_FUSION_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diadfuse/corpus.h"
#include "diadfuse/face-prior.h"

namespace diadfuse::fusion {

struct ProbPair {
  double child = 0.5;
  double adult = 0.5;
};

// P_asd(c) = P_spk * P_im(c) + (1 - P_spk) * (1 - P_im(c)); adult is the
// complement.
ProbPair FuseOneFace(double p_spk, double p_im_child);

// P_asd(c) = P_im1(c) P_spk1 + P_im2(c) P_spk2, and the same with adult
// priors 1 - P_im(c). Throws UnnormalizedSpeakerPair when the speaking pair
// is off the simplex by more than 1e-6.
ProbPair FuseTwoFaces(double p_spk1, double p_spk2, double p_im1_child, double p_im2_child);

// argmax([P_asd(c) P_a(c), P_asd(a) P_a(a)]); ties go to Adult.
corpus::Speaker FuseFinal(const ProbPair &asd, const ProbPair &audio);

// Audio-only decision with the same tie rule.
corpus::Speaker AudioDecision(const ProbPair &audio);

enum class TwoFaceSource { kCombined, kIndividual };
std::string_view ToString(TwoFaceSource s);
TwoFaceSource ParseTwoFaceSource(std::string_view s);

struct OneFaceEvidence {
  double p_spk = 0.5;
  face::TrackPrior prior;
};

struct TwoFaceEvidence {
  // Face 1 is the child track, face 2 the adult track.
  double p_spk1 = 0.5;
  double p_spk2 = 0.5;
  face::TrackPrior prior1;
  face::TrackPrior prior2;
  TwoFaceSource source = TwoFaceSource::kCombined;
  bool degenerate = false;  // individual normalization fell back to (0.5, 0.5)
};

struct UtteranceEvidence {
  std::string utterance_id;
  corpus::VisualCondition condition;
  corpus::Speaker y_true = corpus::Speaker::kAdult;
  ProbPair p_a;
  std::optional<OneFaceEvidence> one_face;
  std::optional<TwoFaceEvidence> two_faces;
};

struct FusionRecord {
  std::string utterance_id;
  corpus::VisualCondition condition;
  ProbPair p_a;
  std::vector<double> p_spk;             // empty, {P_spk} or {P_spk1, P_spk2}
  std::vector<face::TrackPrior> p_im;    // matching the faces used
  std::optional<ProbPair> p_asd;
  std::optional<TwoFaceSource> two_face_source;
  bool degenerate = false;
  corpus::Speaker y_hat = corpus::Speaker::kAdult;
  corpus::Speaker y_true = corpus::Speaker::kAdult;
  // Others-condition utterances are decided from audio alone and left out
  // of headline metrics.
  bool excluded = false;
};

FusionRecord ClassifyUtterance(const UtteranceEvidence &evidence);

std::string ToJsonLine(const FusionRecord &record);
FusionRecord FromJsonLine(std::string_view line);
void WriteRecords(const std::filesystem::path &path, const std::vector<FusionRecord> &records);
std::vector<FusionRecord> ReadRecords(const std::filesystem::path &path);

}  // namespace diadfuse::fusion

#endif  // DIADFUSE_FUSION_H_
