// core/src/face-prior.cc

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

#include "diadfuse/face-prior.h"

#include <algorithm>
#include <cmath>

#include "diadfuse/error.h"

namespace diadfuse::face {
namespace {

void CheckDistribution(const corpus::BracketDist &dist) {
  double sum = 0.0;
  for (double v : dist) {
    if (!(v >= 0.0) || !std::isfinite(v)) Fail(Errc::NotADistribution, "negative bracket mass");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    Fail(Errc::NotADistribution, "bracket masses sum to " + std::to_string(sum));
  }
}

}  // namespace

double BracketToChildProb(const corpus::BracketDist &dist) {
  CheckDistribution(dist);
  double p = 0.0;
  for (int k = 0; k < kChildBrackets; ++k) p += dist[k];
  return std::clamp(p, 0.0, 1.0);
}

double BracketToAdultProb(const corpus::BracketDist &dist) {
  CheckDistribution(dist);
  double p = 0.0;
  for (int k = kChildBrackets; k < corpus::kBracketCount; ++k) p += dist[k];
  return std::clamp(p, 0.0, 1.0);
}

TrackPrior TrackChildProb(const corpus::FaceTrack &track) {
  if (track.bracket_dists.empty()) Fail(Errc::EmptyTrack, track.id);
  double sum = 0.0;
  for (const auto &d : track.bracket_dists) sum += BracketToChildProb(d);
  TrackPrior prior;
  prior.track_id = track.id;
  prior.n_images = track.bracket_dists.size();
  prior.p_child = std::clamp(sum / static_cast<double>(prior.n_images), 0.0, 1.0);
  return prior;
}

}  // namespace diadfuse::face
