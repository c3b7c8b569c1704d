// include/diadfuse/face-prior.h

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

#ifndef DIADFUSE_FACE_PRIOR_H_
#define DIADFUSE_FACE_PRIOR_H_

#include <string>

#include "diadfuse/corpus.h"

namespace diadfuse::face {

// Brackets 0..2 (0-2, 3-9, 10-19 years) are the child label; 3..8 adult.
inline constexpr int kChildBrackets = 3;

struct TrackPrior {
  std::string track_id;
  double p_child = 0.5;
  std::size_t n_images = 0;
};

double BracketToChildProb(const corpus::BracketDist &dist);
double BracketToAdultProb(const corpus::BracketDist &dist);

// Mean of the per-image child probabilities over all images of the track.
TrackPrior TrackChildProb(const corpus::FaceTrack &track);

}  // namespace diadfuse::face

#endif  // DIADFUSE_FACE_PRIOR_H_
