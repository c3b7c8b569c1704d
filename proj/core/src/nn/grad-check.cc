// core/src/nn/grad-check.cc

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

#include "diadfuse/nn/grad-check.h"

#include <algorithm>
#include <cmath>

namespace diadfuse::nn {
namespace {

double Evaluate(const LossBuilder &loss, const ModelParams &params) {
  Tape tape(params, /*record=*/false);
  return tape.Scalar(loss(tape));
}

}  // namespace

GradCheckReport GradCheck(const LossBuilder &loss, const ModelParams &params, double step,
                          double floor) {
  Grads analytic(params);
  {
    Tape tape(params);
    Var l = loss(tape);
    tape.Backward(l, analytic);
  }
  GradCheckReport report;
  ModelParams probe = params;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    Tensor2 &w = probe.at(i);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double orig = w.data()[k];
      w.data()[k] = orig + step;
      const double up = Evaluate(loss, probe);
      w.data()[k] = orig - step;
      const double down = Evaluate(loss, probe);
      w.data()[k] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.at(i).data()[k];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.checked;
      if (report.worst_index < 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = probe.name(i);
        report.worst_index = k;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace diadfuse::nn
