// include/diadfuse/nn/adam.h

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

#ifndef DIADFUSE_NN_ADAM_H_
#define DIADFUSE_NN_ADAM_H_

#include "diadfuse/nn/tensor.h"

namespace diadfuse::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are sized from the params
// passed at construction.
class Adam {
 public:
  Adam(const ModelParams &params, AdamConfig config);

  void Step(ModelParams &params, const Grads &grads);
  long steps() const { return t_; }
  const AdamConfig &config() const { return config_; }

 private:
  AdamConfig config_;
  Grads m_;
  Grads v_;
  long t_ = 0;
};

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_ADAM_H_
