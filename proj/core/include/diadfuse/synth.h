// include/diadfuse/synth.h

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

#ifndef DIADFUSE_SYNTH_H_
#define DIADFUSE_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>

#include "diadfuse/corpus.h"

namespace diadfuse::synth {

// Controls for the Gaussian-cluster corpus generator. Mixes are indexed by
// the enum order of ConditionTag and UttType.
struct SynthConfig {
  int n_sessions = 40;
  int utterances_per_session = 100;
  int audio_dim = 16;
  int audio_layers = 3;
  double audio_frame_rate = 25.0;  // multiple of 25
  int visual_dim = 16;
  double separability = 1.0;
  double visual_informativeness = 1.0;
  std::array<double, 4> condition_mix{0.18, 0.32, 0.48, 0.02};
  std::array<double, 4> type_mix{0.75, 0.15, 0.07, 0.03};
  double child_fraction = 0.357;
  double child_fraction_spread = 0.15;  // per-session jitter
  double duration_median = 1.0;
  double duration_sigma = 0.6;  // log-normal
  double duration_min = 0.2;
  double duration_max = 5.0;

  // Audio geometry.
  double class_distance = 2.5;  // half-distance of the class means at separability 1
  double audio_noise = 1.0;
  double session_offset = 0.2;
  double envelope_gain = 2.0;  // speech activity on layer 0

  // Visual geometry.
  double articulation_gain = 3.0;
  double common_mode = 0.6;  // per-utterance nuisance shared by all tracks
  double visual_noise = 0.5;
  double one_face_speaker_visible = 0.5;
  double decoy_track_rate = 0.3;  // partial tracks for ZeroFace utterances

  // Age-bracket outputs.
  double bracket_noise = 0.15;
  double bracket_flip = 0.05;
  double images_per_second = 5.0;

  std::uint64_t seed = 0;

  void Validate() const;  // InvalidConfig
};

SynthConfig SynthConfigFromJson(const std::string &text);
std::string ToJson(const SynthConfig &c);

// Raw corpus (before preprocessing). Values are rounded to f32 so the
// in-memory corpus equals what WriteCorpus/LoadManifest round-trips.
corpus::Corpus Generate(const SynthConfig &config);

// Adds N(0, noise_level^2) to every audio embedding; visual embeddings are
// shared unchanged.
corpus::Corpus DegradeAudio(const corpus::Corpus &corpus, double noise_level, std::uint64_t seed);

}  // namespace diadfuse::synth

#endif  // DIADFUSE_SYNTH_H_
