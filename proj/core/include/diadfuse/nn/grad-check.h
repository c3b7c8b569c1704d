// include/diadfuse/nn/grad-check.h

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

#ifndef DIADFUSE_NN_GRAD_CHECK_H_
#define DIADFUSE_NN_GRAD_CHECK_H_

#include <functional>
#include <string>

#include "diadfuse/nn/tape.h"

namespace diadfuse::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;  // at the worst coordinate
  double numeric = 0.0;
  std::size_t checked = 0;

  bool Passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Builds a 1x1 loss on the given tape. Must be a pure function of the
// parameters the tape was constructed with.
using LossBuilder = std::function<Var(Tape &)>;

// Compares reverse-mode gradients with central differences over every scalar
// parameter. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport GradCheck(const LossBuilder &loss, const ModelParams &params,
                          double step = 1e-5, double floor = 1e-4);

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_GRAD_CHECK_H_
