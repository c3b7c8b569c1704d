// include/diadfuse/training.h

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

#ifndef DIADFUSE_TRAINING_H_
#define DIADFUSE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diadfuse/nn/tensor.h"

namespace diadfuse::train {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 64;
  int max_epochs = 20;
  std::uint64_t seed = 0;
  // Stop after this many epochs without a new best validation score; 0 runs
  // all max_epochs.
  int patience = 0;
  int threads = 1;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  double best_val_f1 = 0.0;
  double best_val_loss = 0.0;

  std::string ToJson() const;
};

struct ValidationScore {
  double f1 = 0.0;
  double loss = 0.0;
};

struct Objective {
  std::size_t n_train = 0;
  // Adds the gradient of example i's loss to `grads` and returns the loss.
  std::function<double(const nn::ModelParams &, std::size_t, nn::Grads &)> example_grad;
  std::function<ValidationScore(const nn::ModelParams &)> validate;
};

// Minibatch Adam over a seeded per-epoch shuffle. Batch gradients are the
// mean of per-example gradients, reduced in fixed chunks of kReduceChunk in
// index order, so results do not depend on the thread count. Returns the
// parameters of the best epoch: highest validation F1, ties broken by lower
// validation loss, then by the earlier epoch.
nn::ModelParams Fit(nn::ModelParams init, const Objective &objective, const TrainConfig &config,
                    TrainLog *log = nullptr, const std::string &tag = "model");

inline constexpr std::size_t kReduceChunk = 8;

// Runs fn(i) for i in [0, n) on up to `threads` workers. fn must only write
// to slots owned by i.
void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)> &fn);

int DefaultThreads();

}  // namespace diadfuse::train

#endif  // DIADFUSE_TRAINING_H_
