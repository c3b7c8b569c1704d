// core/src/nn/adam.cc

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

#include "diadfuse/nn/adam.h"

#include <cmath>

#include "diadfuse/error.h"

namespace diadfuse::nn {

Adam::Adam(const ModelParams &params, AdamConfig config)
    : config_(config), m_(params), v_(params) {}

void Adam::Step(ModelParams &params, const Grads &grads) {
  if (!grads.SameShapeAs(params) || !m_.SameShapeAs(params)) {
    Fail(Errc::ShapeMismatch, "adam: gradient shapes do not match parameters");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = m_.at(i).array();
    auto v = v_.at(i).array();
    const auto g = grads.at(i).array();
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.square();
    params.at(i).array() -= config_.lr * (m / c1) / ((v / c2).sqrt() + config_.eps);
  }
}

}  // namespace diadfuse::nn
